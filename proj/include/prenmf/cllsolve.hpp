#pragma once

#include "prenmf/matcore.hpp"

#include <optional>
#include <vector>

namespace prenmf {

inline constexpr double kDefaultFeasTol = 1e-9;
inline constexpr double kDefaultKktTol = 1e-8;

/// Knobs for the primal active-set kernel.
struct ActiveSetOptions {
  double feas_tol = kDefaultFeasTol;  // relative to ||d||_inf
  double kkt_tol = kDefaultKktTol;    // certificate level; the kernel drops multipliers below -kkt_tol / 100 * gradient scale
  int max_iter = 0;                   // 0 selects 50 * (number of variables + 1)
  // Tie-breaking rank per variable (a permutation of 0..p-1). Empty means
  // natural order. Rows always rank after the bounds.
  std::vector<Index> priority;
  // Start at x = 0 with every bound in the working set (true) or with an
  // empty working set (false). Both are valid; the fitted vector agrees.
  bool start_with_bounds = true;
};

struct BoundedLsqResult {
  Vector x;
  std::vector<Index> active_bounds;  // variables held at zero
  std::vector<Index> active_rows;    // rows j with (Cx)_j == upper_j
  int iterations = 0;
};

/// min ||d - C x||^2  s.t.  x >= 0  and, when `upper` is given, C x <= upper.
///
/// Primal active-set method. Each equality-constrained subproblem is solved in
/// the null space of the active rows with a rank-revealing (complete
/// orthogonal) factorization, taking the minimum-norm step. The objective only
/// depends on Cx, so the projected gradient always lies in the range of the
/// reduced Hessian and no regularization is needed. Starts from x = 0, which
/// must be feasible (upper >= 0).
BoundedLsqResult solve_bounded_lsq(const Matrix& c, const Vector& d, const Vector* upper,
                                   const ActiveSetOptions& opt = {});

/// Lawson-Hanson NNLS. Kept separate from the active-set kernel so it can
/// serve as an independent certificate.
Vector nnls_lawson_hanson(const Matrix& a, const Vector& b, int max_iter = 0);

/// One column of the preprocessing problem:
///   min ||M_:i - M b||^2  s.t.  b >= 0, b_i = 0, M b <= M_:i + eps ||M_:i||_inf e.
struct CllsProblem {
  const Matrix* m = nullptr;
  Index column = 0;
  double epsilon = 0.0;

  Vector target() const { return m->col(column); }
  Vector upper_bound() const;
  /// M with column i removed (b_i eliminated).
  Matrix reduced() const;
};

struct CllsSolution {
  Vector b;                   // length n, b(i) == 0
  double objective = 0.0;     // ||M_:i - M b||^2
  double kkt_residual = 0.0;  // from kkt_check
  // Tight constraints: k < n is the bound b_k >= 0, n + j is row j of M b <= u.
  std::vector<Index> active_set;
  int iterations = 0;
};

struct ClsOptions {
  double feas_tol = kDefaultFeasTol;
  double kkt_tol = kDefaultKktTol;
  int max_iter = 0;  // 0 selects 50 n
  std::vector<Index> priority;
  bool start_with_bounds = true;
};

CllsSolution solve_column(const CllsProblem& p, const ClsOptions& opt = {});

/// Independent optimality certificate for a candidate b (length n, b_i = 0):
/// the larger of the normalized projected-gradient norm (distance of -grad to
/// the normal cone of the active constraints, via Lawson-Hanson) and the
/// complementarity violation. Throws InfeasiblePoint beyond feas_tol.
double kkt_check(const CllsProblem& p, const Vector& b, double feas_tol = kDefaultFeasTol);

struct ColumnSweep {
  Matrix b_star;              // n x n, nonnegative, zero diagonal
  Vector kkt;                 // per-column residual
  std::vector<int> iterations;
};

/// Solves all n column problems. The OpenMP path distributes columns over
/// threads; each solve is sequential and deterministic, so both paths return
/// identical results.
ColumnSweep solve_all_columns(const Matrix& m, double epsilon, const ClsOptions& opt = {});
ColumnSweep solve_all_columns_serial(const Matrix& m, double epsilon, const ClsOptions& opt = {});

/// B* for P_eps(M) = M (I - B*).
Matrix preprocess_matrix(const Matrix& m, double epsilon, const ClsOptions& opt = {});
Matrix preprocess_matrix_serial(const Matrix& m, double epsilon, const ClsOptions& opt = {});

}  // namespace prenmf
