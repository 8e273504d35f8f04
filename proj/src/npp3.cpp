#include "prenmf/npp3.hpp"

#include "prenmf/cllsolve.hpp"
#include "prenmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace prenmf::npp {
namespace {

double cross(const Point& a, const Point& b) { return a.x() * b.y() - a.y() * b.x(); }

double wrap01(double t) {
  double w = t - std::floor(t);
  if (w >= 1.0) w -= 1.0;
  return w;
}

// Distance of b from the line through a and c.
double line_distance(const Point& a, const Point& b, const Point& c) {
  const Point e = c - a;
  const double len = e.norm();
  if (len == 0.0) return (b - a).norm();
  return std::abs(cross(e, b - a)) / len;
}

// Removes repeated and collinear vertices of a closed polygon.
std::vector<Point> simplify(std::vector<Point> v, double tol) {
  bool changed = true;
  while (changed && v.size() >= 3) {
    changed = false;
    for (std::size_t i = 0; i < v.size() && v.size() >= 3; ++i) {
      const Point& prev = v[(i + v.size() - 1) % v.size()];
      const Point& next = v[(i + 1) % v.size()];
      if ((v[i] - prev).norm() <= tol || line_distance(prev, v[i], next) <= tol) {
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(i));
        changed = true;
        break;
      }
    }
  }
  return v;
}

Polygon2 make_polygon(std::vector<Point> v) {
  Polygon2 p;
  p.vertices = std::move(v);
  p.cumulative.assign(p.vertices.size() + 1, 0.0);
  for (std::size_t k = 0; k < p.vertices.size(); ++k) {
    p.cumulative[k + 1] = p.cumulative[k] + (p.vertex(k + 1) - p.vertex(k)).norm();
  }
  return p;
}

// Keeps the part of a convex polygon with a . y + c >= 0.
std::vector<Point> clip(const std::vector<Point>& poly, const Point& a, double c) {
  std::vector<Point> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = poly[i];
    const Point& q = poly[(i + 1) % n];
    const double fp = a.dot(p) + c;
    const double fq = a.dot(q) + c;
    if (fp >= 0.0) out.push_back(p);
    if ((fp >= 0.0) != (fq >= 0.0)) {
      const double s = fp / (fp - fq);
      out.push_back(p + s * (q - p));
    }
  }
  return out;
}

// Andrew's monotone chain; returns indices into pts, counterclockwise, with
// collinear points (within tol) dropped.
std::vector<std::size_t> convex_hull(const std::vector<Point>& pts, double tol) {
  std::vector<std::size_t> idx(pts.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return pts[a].x() < pts[b].x() || (pts[a].x() == pts[b].x() && pts[a].y() < pts[b].y());
  });
  if (idx.size() < 3) return idx;
  auto turn = [&](std::size_t o, std::size_t a, std::size_t b) {
    const Point ob = pts[b] - pts[o];
    const double len = ob.norm();
    if (len <= tol) return 0.0;
    return cross(pts[a] - pts[o], ob) / len;  // signed distance of a from line o-b, positive = left turn
  };
  std::vector<std::size_t> hull(2 * idx.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    while (k >= 2 && turn(hull[k - 2], hull[k - 1], idx[i]) <= tol) --k;
    hull[k++] = idx[i];
  }
  for (std::size_t i = idx.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && turn(hull[k - 2], hull[k - 1], idx[i]) <= tol) --k;
    hull[k++] = idx[i];
  }
  hull.resize(k - 1);
  return hull;
}

// Exit of the ray x + s dir from the outer polygon.
std::pair<double, std::size_t> ray_exit(const Polygon2& p, const Point& x, const Point& dir, double tol) {
  double best = std::numeric_limits<double>::infinity();
  std::size_t best_edge = 0;
  for (std::size_t e = 0; e < p.size(); ++e) {
    const auto [n, h] = p.halfplane(e);
    const double nd = n.dot(dir);
    if (nd <= 1e-12) continue;
    const double slack = h - n.dot(x);
    // A ray grazing the side it starts on does not leave through it.
    if (std::abs(slack) <= tol && nd <= 1e-7) continue;
    const double s = std::max(0.0, slack) / nd;
    if (s < best) {
      best = s;
      best_edge = e;
    }
  }
  return {best, best_edge};
}

double boundary_param(const Polygon2& p, std::size_t edge, const Point& y) {
  const double len = p.cumulative[edge + 1] - p.cumulative[edge];
  const double along = std::clamp((y - p.vertex(edge)).norm(), 0.0, len);
  return wrap01((p.cumulative[edge] + along) / p.perimeter());
}

bool strictly_inside(const Polygon2& q, const Point& x, double tol) {
  if (q.size() < 3) return false;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Point e = q.vertex(j + 1) - q.vertex(j);
    if (cross(e, x - q.vertex(j)) / e.norm() <= tol) return false;
  }
  return true;
}

struct Signature {
  std::vector<std::size_t> items;
  bool operator==(const Signature&) const = default;
};

Signature signature(const NppInstance& npp, double t, int k) {
  const TangentWalk w = walk_fk(npp, t, k);
  Signature s;
  for (std::size_t i = 0; i < w.steps.size(); ++i) {
    s.items.push_back(npp.outer.edge_at(wrap01(w.t_values[i])));
    s.items.push_back(w.steps[i].q_index);
    s.items.push_back(static_cast<std::size_t>(w.steps[i].contact));
  }
  s.items.push_back(npp.outer.edge_at(wrap01(w.t_values.back())));
  return s;
}

// Endpoints of {t in [0,1) : f_level(t) == y (mod 1)}; f_level is continuous,
// nondecreasing, and f(t + 1) = f(t) + 1.
std::pair<double, double> preimage(const NppInstance& npp, int level, double y) {
  if (level == 0) return {wrap01(y), wrap01(y)};
  auto f = [&](double t) { return walk_fk(npp, t, level).fk(); };
  const double f0 = f(0.0);
  const double target = y + std::ceil(f0 - y);  // in [f0, f0 + 1)
  double lo = 0.0, hi = 1.0;
  if (f0 < target) {
    for (int it = 0; it < 60; ++it) {
      const double mid = 0.5 * (lo + hi);
      (f(mid) >= target ? hi : lo) = mid;
    }
  } else {
    hi = 0.0;
  }
  const double first = hi;
  lo = 0.0;
  hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) <= target ? lo : hi) = mid;
  }
  return {wrap01(first), wrap01(lo)};
}

double hausdorff(const Matrix& a, const Matrix& b) {
  auto directed = [](const Matrix& x, const Matrix& y) {
    double worst = 0.0;
    for (Index i = 0; i < x.cols(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < y.cols(); ++j) best = std::min(best, (x.col(i) - y.col(j)).norm());
      worst = std::max(worst, best);
    }
    return worst;
  };
  return std::max(directed(a, b), directed(b, a));
}

}  // namespace

Point Polygon2::point_at(double t) const {
  const double tw = t - std::floor(t / perimeter()) * perimeter();
  const std::size_t k = edge_at(tw);
  const double len = cumulative[k + 1] - cumulative[k];
  const double s = len > 0.0 ? (tw - cumulative[k]) / len : 0.0;
  return vertex(k) + std::clamp(s, 0.0, 1.0) * (vertex(k + 1) - vertex(k));
}

std::size_t Polygon2::edge_at(double t) const {
  const double tw = t - std::floor(t / perimeter()) * perimeter();
  auto it = std::upper_bound(cumulative.begin(), cumulative.end(), tw);
  std::size_t k = it == cumulative.begin() ? 0 : static_cast<std::size_t>(it - cumulative.begin()) - 1;
  return std::min(k, vertices.size() - 1);
}

double Polygon2::param_of(const Point& y) const {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < size(); ++k) {
    const Point a = vertex(k), b = vertex(k + 1);
    const double s = std::clamp((y - a).dot(b - a) / (b - a).squaredNorm(), 0.0, 1.0);
    const double d = (a + s * (b - a) - y).norm();
    if (d < best_d) {
      best_d = d;
      best = k;
    }
  }
  const double along = std::clamp((y - vertex(best)).norm(), 0.0, cumulative[best + 1] - cumulative[best]);
  double t = cumulative[best] + along;
  if (t >= perimeter()) t -= perimeter();
  return t;
}

std::pair<Point, double> Polygon2::halfplane(std::size_t k) const {
  const Point e = vertex(k + 1) - vertex(k);
  const Point n = Point(e.y(), -e.x()).normalized();
  return {n, n.dot(vertex(k))};
}

Point AffineChart::project(const Vector& x) const {
  const Eigen::Matrix2d g = basis.transpose() * basis;
  return g.ldlt().solve(basis.transpose() * (x - origin));
}

NppInstance build_npp(const Matrix& m, const BuildOptions& opt) {
  require_finite(m, "NPP input");
  if (m.rows() < 3 || m.cols() < 3) throw Error(ErrorCode::DegenerateChart, "need at least 3 rows and columns");
  const double scale = m.cwiseAbs().maxCoeff();
  if (m.minCoeff() < -1e-12 * scale) {
    throw Error(ErrorCode::InvalidArgument, "NPP input must be nonnegative");
  }
  const Matrix mc = m.cwiseMax(0.0);

  NppInstance npp;
  npp.m = m.rows();
  npp.n = m.cols();
  const Pullback pb = pullback(mc);
  npp.theta = pb.theta;
  npp.kept = pb.kept;
  if (npp.theta.cols() < 3) throw Error(ErrorCode::DegenerateChart, "fewer than 3 non-zero columns");

  const Vector x0 = npp.theta.rowwise().mean();
  const Matrix centered = npp.theta.colwise() - x0;
  Eigen::JacobiSVD<Matrix> svd(centered, Eigen::ComputeThinU);
  const Vector& s = svd.singularValues();
  if (s(0) == 0.0 || s.size() < 2 || s(1) <= opt.rank_tol * s(0)) {
    throw Error(ErrorCode::DegenerateChart, "pulled-back columns are collinear (rank < 3)");
  }
  if (s.size() > 2 && s(2) > opt.rank_tol * s(0)) {
    throw Error(ErrorCode::RankMismatch, "matrix rank exceeds 3");
  }
  Matrix basis = svd.matrixU().leftCols(2);
  if (opt.rotation != 0.0) {
    Eigen::Matrix2d rot;
    rot << std::cos(opt.rotation), -std::sin(opt.rotation), std::sin(opt.rotation), std::cos(opt.rotation);
    basis = basis * rot;
  }

  // Outer polygon: x0 + basis y >= 0, clipped from a box that contains the simplex slice.
  std::vector<Point> poly{{-4, -4}, {4, -4}, {4, 4}, {-4, 4}};
  for (Index i = 0; i < m.rows(); ++i) {
    const Point a = basis.row(i).transpose();
    if (a.norm() <= 1e-14) continue;
    poly = clip(poly, a, x0(i));
    if (poly.size() < 3) throw Error(ErrorCode::EmptyOuter, "outer polygon is empty");
  }
  poly = simplify(poly, 1e-13);
  if (poly.size() < 3) throw Error(ErrorCode::EmptyOuter, "outer polygon is degenerate");
  const double perimeter = make_polygon(poly).perimeter();
  for (auto& v : poly) v /= perimeter;
  poly = simplify(poly, kGeomTol);
  npp.outer = make_polygon(poly);
  npp.chart.origin = x0;
  npp.chart.basis = basis * perimeter;

  std::vector<Point> pts(static_cast<std::size_t>(npp.theta.cols()));
  for (Index j = 0; j < npp.theta.cols(); ++j) {
    pts[static_cast<std::size_t>(j)] = basis.transpose() * (npp.theta.col(j) - x0) / perimeter;
  }
  const auto hull = convex_hull(pts, kGeomTol);
  if (hull.size() < 3) throw Error(ErrorCode::DegenerateChart, "inner polygon is degenerate");
  std::vector<Point> inner;
  for (std::size_t h : hull) {
    inner.push_back(pts[h]);
    npp.inner_source.push_back(npp.kept[h]);
  }
  npp.inner = make_polygon(inner);
  return npp;
}

Step tangent_step(const NppInstance& npp, double t) {
  const Polygon2& p = npp.outer;
  const Polygon2& q = npp.inner;
  const double tw = wrap01(t);
  const Point x = p.point_at(tw);
  const std::size_t ke = p.edge_at(tw);
  if (strictly_inside(q, x, kGeomTol)) {
    throw Error(ErrorCode::StartInsideQ, "walk point lies inside the inner polygon");
  }
  const Point ref = (p.vertex(ke + 1) - p.vertex(ke)).normalized();

  Step step;
  double best_angle = std::numeric_limits<double>::infinity();
  double best_dist = -1.0;
  bool found = false;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Point w = q.vertex(j) - x;
    const double dist = w.norm();
    if (dist <= kGeomTol) continue;
    double ang = std::atan2(cross(ref, w), ref.dot(w));
    if (ang < -0.5 * std::numbers::pi) {
      ang = std::numbers::pi;
    } else if (ang < 0.0) {
      ang = 0.0;
    }
    if (ang < best_angle - 1e-12 || (std::abs(ang - best_angle) <= 1e-12 && dist > best_dist)) {
      best_angle = ang;
      best_dist = dist;
      step.q_index = j;
      found = true;
    }
  }
  if (!found) throw Error(ErrorCode::DegenerateChart, "inner polygon collapses onto the walk point");
  step.q = q.vertex(step.q_index);
  const Point dir = (step.q - x).normalized();
  const auto [s, edge] = ray_exit(p, x, dir, kGeomTol);
  if (!std::isfinite(s)) {
    throw Error(ErrorCode::EmptyOuter, "tangent ray from t = " + std::to_string(t) + " (q " + std::to_string(step.q_index) + ") does not leave the outer polygon");
  }
  step.exit_edge = edge;
  const Point y = x + s * dir;
  const double t_exit = boundary_param(p, edge, y);
  double delta = t_exit - tw;
  delta -= std::floor(delta);
  step.t_next = t + delta;

  const auto [n0, h0] = p.halfplane(ke);
  const auto [n1, h1] = p.halfplane(edge);
  if (std::abs(n0.dot(step.q) - h0) <= kGeomTol) {
    step.contact = ContactCase::AlongStartSide;
  } else if (std::abs(n1.dot(step.q) - h1) <= kGeomTol) {
    step.contact = ContactCase::AlongExitSide;
  } else {
    step.contact = ContactCase::Interior;
  }
  return step;
}

TangentWalk walk_fk(const NppInstance& npp, double t, int k) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "walk length must be nonnegative");
  TangentWalk w;
  w.t_start = t;
  w.k = k;
  w.t_values.push_back(t);
  w.vertices.push_back(npp.outer.point_at(wrap01(t)));
  for (int i = 0; i < k; ++i) {
    const Step s = tangent_step(npp, w.t_values.back());
    w.steps.push_back(s);
    w.t_values.push_back(s.t_next);
    w.vertices.push_back(npp.outer.point_at(wrap01(s.t_next)));
  }
  return w;
}

ContactChangePoints contact_change_points(const NppInstance& npp, int k, int grid) {
  const Polygon2& p = npp.outer;
  const Polygon2& q = npp.inner;
  ContactChangePoints out;

  // Generators: outer vertices, then the points where the lines through inner
  // edges leave the outer polygon behind the edge.
  std::vector<double> extra;
  for (std::size_t v = 0; v < p.size(); ++v) out.generators.push_back(p.cumulative[v]);
  for (std::size_t j = 0; j < q.size(); ++j) {
    const Point a = q.vertex(j), b = q.vertex(j + 1);
    for (int side = 0; side < 2; ++side) {
      const Point from = side == 0 ? a : b;
      const Point dir = (side == 0 ? a - b : b - a).normalized();
      double best = std::numeric_limits<double>::infinity();
      std::size_t edge = 0;
      for (std::size_t e = 0; e < p.size(); ++e) {
        const auto [n, h] = p.halfplane(e);
        const double nd = n.dot(dir);
        if (nd <= 1e-12) continue;
        const double s = std::max(0.0, h - n.dot(from)) / nd;
        if (s < best) {
          best = s;
          edge = e;
        }
      }
      if (!std::isfinite(best)) continue;
      const double t = boundary_param(p, edge, from + best * dir);
      (side == 0 ? out.generators : extra).push_back(t);
    }
  }
  auto close_mod1 = [](double a, double b) {
    const double d = std::abs(a - b);
    return std::min(d, 1.0 - d) <= 1e-9;
  };
  std::vector<double> distinct;
  for (double g : out.generators) {
    if (std::none_of(distinct.begin(), distinct.end(), [&](double d) { return close_mod1(d, g); })) {
      distinct.push_back(g);
    }
  }
  out.classes = distinct.size();
  out.generators = distinct;

  std::vector<double> cand;
  auto all = distinct;
  all.insert(all.end(), extra.begin(), extra.end());
  for (double g : all) {
    for (int level = 0; level <= k; ++level) {
      const auto [a, b] = preimage(npp, level, g);
      cand.push_back(a);
      cand.push_back(b);
    }
  }

  // Safety grid: locate signature changes the generators might have missed.
  if (grid > 0) {
    double prev_t = 0.0;
    Signature prev = signature(npp, prev_t, k);
    for (int g = 1; g <= grid; ++g) {
      const double t = static_cast<double>(g) / grid;
      const Signature cur = signature(npp, t, k);
      cand.push_back(wrap01(t));
      if (!(cur == prev)) {
        double lo = prev_t, hi = t;
        for (int it = 0; it < 50; ++it) {
          const double mid = 0.5 * (lo + hi);
          (signature(npp, mid, k) == prev ? lo : hi) = mid;
        }
        cand.push_back(wrap01(lo));
        cand.push_back(wrap01(hi));
      }
      prev = cur;
      prev_t = t;
    }
  }
  std::sort(cand.begin(), cand.end());
  for (double c : cand) {
    if (out.t.empty() || c - out.t.back() > 1e-14) out.t.push_back(c);
  }
  return out;
}

Feasibility feasible_k(const NppInstance& npp, int k, double tol) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be positive");
  const auto cp = contact_change_points(npp, k);
  Feasibility f;
  f.max_slack = -std::numeric_limits<double>::infinity();
  for (double t : cp.t) {
    const double slack = walk_fk(npp, t, k).slack();
    if (slack > f.max_slack) {
      f.max_slack = slack;
      f.witness = t;
    }
  }
  f.feasible = f.max_slack >= -tol;
  if (!f.feasible) f.witness.reset();
  return f;
}

Solutions enumerate_solutions(const NppInstance& npp, int k, double tol) {
  const auto cp = contact_change_points(npp, k);
  Solutions out;
  out.max_slack = -std::numeric_limits<double>::infinity();
  std::vector<double> tight;
  for (double t : cp.t) {
    const double slack = walk_fk(npp, t, k).slack();
    out.max_slack = std::max(out.max_slack, slack);
    if (slack >= -tol) tight.push_back(t);
  }
  if (tight.empty()) {
    out.status = SolutionStatus::Infeasible;
    return out;
  }
  out.status = SolutionStatus::Finite;
  // Strict feasibility somewhere means an open set of starting points.
  if (out.max_slack > 1e-7) out.status = SolutionStatus::NotFinite;
  // A tight constant piece is also a continuum.
  for (std::size_t i = 0; i < tight.size() && out.status == SolutionStatus::Finite; ++i) {
    const double a = tight[i];
    const double b = i + 1 < tight.size() ? tight[i + 1] : tight[0] + 1.0;
    if (b - a <= 1e-6) continue;
    auto pos = std::upper_bound(cp.t.begin(), cp.t.end(), a);
    const bool adjacent = pos == cp.t.end() ? b >= 1.0 : *pos >= b - 1e-14;
    if (!adjacent) continue;
    const double mid = 0.5 * (a + b);
    if (walk_fk(npp, mid, k).slack() >= -tol) out.status = SolutionStatus::NotFinite;
  }

  for (double t : tight) {
    const TangentWalk w = walk_fk(npp, t, k);
    Matrix lifted(npp.m, k);
    std::vector<Point> chart;
    for (int i = 0; i < k; ++i) {
      lifted.col(i) = npp.chart.lift(w.vertices[static_cast<std::size_t>(i)]);
      chart.push_back(w.vertices[static_cast<std::size_t>(i)]);
    }
    lifted = (lifted.array() < kGeomTol).select(0.0, lifted);
    bool dup = false;
    for (const auto& prev : out.polygons) {
      if (hausdorff(prev, lifted) <= 1e-6) {
        dup = true;
        break;
      }
    }
    if (dup) continue;
    out.polygons.push_back(lifted);
    out.chart_polygons.push_back(chart);
    out.start_t.push_back(t);
  }
  return out;
}

double hull_distance(const Vector& x, const Matrix& xs) {
  // For stochastic columns the sum row is implied; it only guards inputs
  // that are off the simplex. A heavy weight would loosen the NNLS stop.
  const double w = std::max(1.0, xs.cwiseAbs().maxCoeff());
  Matrix a(xs.rows() + 1, xs.cols());
  a.topRows(xs.rows()) = xs;
  a.row(xs.rows()).setConstant(w);
  Vector b(x.size() + 1);
  b.head(x.size()) = x;
  b(x.size()) = w;
  const Vector lambda = nnls_lawson_hanson(a, b);
  return (xs * lambda - x).norm() + std::abs(lambda.sum() - 1.0);
}

bool hull_membership(const Vector& x, const Matrix& xs, double tol) { return hull_distance(x, xs) <= tol; }

int min_vertices(const NppInstance& npp) {
  const int top = std::max(3, static_cast<int>(npp.inner.size()));
  for (int k = 3; k < top; ++k) {
    if (feasible_k(npp, k).feasible) return k;
  }
  return top;
}

}  // namespace prenmf::npp
