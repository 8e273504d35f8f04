#pragma once

#include "prenmf/matcore.hpp"

#include <optional>
#include <string>
#include <vector>

namespace prenmf {

/// Columns of M that sit on a vertex of the simplex slice: at least r - 1
/// zero entries whose rows have pairwise different supports. Zero rows are
/// skipped since their facet is the whole slice.
std::vector<Index> vertex_columns_by_sparsity(const Matrix& m, Index r, double zero_tol = kDefaultZeroTol);

/// Sufficient test only. Needs rank(M) == r and r certified columns that are
/// pairwise non-proportional; rank_+ == rank is assumed, not checked.
bool is_unique_by_sparsity(const Matrix& m, Index r, double zero_tol = kDefaultZeroTol);

struct ContainmentWitness {
  Index k = 0;        // supp(U_:k) is inside ...
  Index l = 0;        // ... supp(U_:l)
  Index p_bar = 0;    // row that the shear zeroes
  double epsilon = 0.0;
  Matrix d;           // identity with d(k, l) = -epsilon
  Matrix ud;          // U d
  bool verified = false;  // U d >= -tol and (U d)(p_bar, l) <= tol < U(p_bar, l)
};

/// Every ordered pair of columns whose supports nest, with the shear D that
/// gives another NMF (U D, D^{-1} V).
std::vector<ContainmentWitness> support_containment(const Matrix& u, double zero_tol = kDefaultZeroTol);

struct UniquenessReport {
  Index r = 0;
  Index rank = 0;                       // numerical rank of M
  std::vector<Index> vertex_columns;
  std::vector<Index> chosen;            // pairwise non-proportional subset of vertex_columns
  bool unique = false;                  // certified; false means "not certified"
  std::optional<bool> rank_plus_three;  // r == 3: minimal inner polygon has 3 vertices
  std::vector<ContainmentWitness> containment;  // on the factor U given, if any
  std::string verdict() const { return unique ? "unique" : "not certified"; }
};

/// Runs the detectors. When r == 3 the rank_+ assumption is checked with the
/// rank-3 geometry. Containment pairs are computed on u when it is given,
/// otherwise on the certified columns.
UniquenessReport uniqueness_report(const Matrix& m, Index r, double zero_tol = kDefaultZeroTol,
                                   const Matrix* u = nullptr);

}  // namespace prenmf
