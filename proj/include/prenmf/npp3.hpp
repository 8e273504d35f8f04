#pragma once

#include "prenmf/matcore.hpp"

#include <array>
#include <optional>
#include <vector>

namespace prenmf::npp {

inline constexpr double kGeomTol = 1e-9;

using Point = Eigen::Vector2d;

/// Convex polygon, counterclockwise, with a closed arc-length table.
/// cumulative[k] is the boundary distance from vertex 0 to vertex k;
/// cumulative.back() is the perimeter.
struct Polygon2 {
  std::vector<Point> vertices;
  std::vector<double> cumulative;

  std::size_t size() const { return vertices.size(); }
  double perimeter() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
  const Point& vertex(std::size_t k) const { return vertices[k % vertices.size()]; }
  Point point_at(double t) const;     // t in boundary units, wrapped
  double param_of(const Point& y) const;  // boundary parameter of a boundary point, in [0, perimeter)
  std::size_t edge_at(double t) const;    // edge index containing wrapped t (outgoing edge at a vertex)
  /// Outward normal and offset of edge k: n . y <= h inside.
  std::pair<Point, double> halfplane(std::size_t k) const;
};

/// Affine map between chart coordinates and the simplex slice:
/// lift(y) = origin + basis * y.
struct AffineChart {
  Vector origin;
  Matrix basis;  // m x 2, orthogonal columns of equal length

  Vector lift(const Point& y) const { return origin + basis * y; }
  Point project(const Vector& x) const;
};

struct NppInstance {
  Polygon2 outer;  // simplex slice, perimeter normalized to 1
  Polygon2 inner;  // hull of the pulled-back columns
  AffineChart chart;
  std::vector<Index> inner_source;  // source column of each inner vertex
  Matrix theta;                     // pulled-back columns (kept ones)
  std::vector<Index> kept;          // source indices of the theta columns
  Index m = 0;                      // rows of the source matrix
  Index n = 0;                      // columns of the source matrix
};

struct BuildOptions {
  double rotation = 0.0;  // extra rotation of the chart, radians
  double rank_tol = 1e-8;
};

NppInstance build_npp(const Matrix& m, const BuildOptions& opt = {});

enum class ContactCase { AlongStartSide = 1, AlongExitSide = 2, Interior = 3 };

struct Step {
  double t_next = 0.0;
  ContactCase contact = ContactCase::Interior;
  Point q;                 // tangent point on the inner polygon
  std::size_t q_index = 0; // inner vertex index
  std::size_t exit_edge = 0;
};

/// One tangent step counterclockwise from x(t): the ray from x(t) that keeps
/// the inner polygon on its left and touches it, followed to the outer
/// boundary. Throws StartInsideQ when x(t) lies strictly inside Q.
Step tangent_step(const NppInstance& npp, double t);

struct TangentWalk {
  double t_start = 0.0;
  int k = 0;
  std::vector<double> t_values;  // t_1 .. t_{k+1}, unwrapped
  std::vector<Step> steps;
  std::vector<Point> vertices;   // x(t_1) .. x(t_{k+1})

  double fk() const { return t_values.back(); }
  double slack() const { return t_values.back() - t_start - 1.0; }
};

TangentWalk walk_fk(const NppInstance& npp, double t, int k);
inline double fk(const NppInstance& npp, double t, int k) { return walk_fk(npp, t, k).fk(); }

struct ContactChangePoints {
  std::vector<double> t;           // sorted, in [0, 1)
  std::vector<double> generators;  // outer vertices and back-projected inner edge lines
  std::size_t classes = 0;         // distinct generators; at most m + n
};

ContactChangePoints contact_change_points(const NppInstance& npp, int k, int grid = 256);

struct Feasibility {
  bool feasible = false;
  std::optional<double> witness;
  double max_slack = 0.0;  // max over candidates of f_k(t) - t - 1
};

Feasibility feasible_k(const NppInstance& npp, int k, double tol = kGeomTol);

enum class SolutionStatus { Finite, NotFinite, Infeasible };

struct Solutions {
  SolutionStatus status = SolutionStatus::Infeasible;
  std::vector<Matrix> polygons;        // m x k, lifted vertices (clipped at zero)
  std::vector<std::vector<Point>> chart_polygons;
  std::vector<double> start_t;
  double max_slack = 0.0;
};

Solutions enumerate_solutions(const NppInstance& npp, int k, double tol = kGeomTol);

/// Whether x lies in conv(X) (columns of X), by weighted NNLS on
/// [X; w e^T] lambda = [x; w].
bool hull_membership(const Vector& x, const Matrix& xs, double tol = 1e-7);
double hull_distance(const Vector& x, const Matrix& xs);

/// Smallest k >= 3 with feasible_k, up to the number of inner vertices.
int min_vertices(const NppInstance& npp);

}  // namespace prenmf::npp
