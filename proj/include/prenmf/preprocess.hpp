#pragma once

#include "prenmf/cllsolve.hpp"
#include "prenmf/matcore.hpp"

#include <optional>
#include <vector>

namespace prenmf {

struct SpectralOptions {
  double shift_factor = 1e-3;  // shift = shift_factor * max column sum
  int max_iter = 10000;
  double tol = 1e-10;
  bool dense_fallback = true;  // eigensolve when the power iteration stalls
};

struct SpectralRadius {
  double rho = 0.0;
  double lower = 0.0;  // Collatz-Wielandt bracket of the final iterate
  double upper = 0.0;
  int iterations = 0;
  bool converged = false;
  bool used_fallback = false;
};

/// Perron root of a nonnegative matrix by shifted power iteration.
/// Throws NonConvergence (with the bracket in the message) when the
/// iteration cap is hit and the dense fallback is disabled.
SpectralRadius spectral_radius_info(const Matrix& b, const SpectralOptions& opt = {});
double spectral_radius(const Matrix& b, const SpectralOptions& opt = {});

/// M (I - alpha B*) = M - alpha M B*.
Matrix apply_alpha(const Matrix& m, const Matrix& b_star, double alpha);

struct Rescaled {
  Matrix scaled;  // p_m * diag(d)
  Vector d;       // ||M_:i|| / ||P_:i||, 1 for zero columns of P
};

Rescaled rescale_columns(const Matrix& p_m, const Matrix& m);

struct PreprocessOptions {
  double epsilon = 0.0;
  double alpha = 1.0;
  bool rescale = false;
  bool allow_duplicates = false;
  bool serial = false;
  ClsOptions cls;
  SpectralOptions spectral;
};

struct PreprocessResult {
  Matrix b_star;
  double epsilon = 0.0;
  double alpha = 1.0;
  Matrix p_alpha_m;
  double rho = 0.0;
  SpectralRadius rho_info;
  Vector column_kkt;
  std::optional<Vector> rescale;
  std::optional<Matrix> rescaled;  // p_alpha_m * diag(rescale)
  std::vector<DuplicatePair> duplicates;
};

/// Full preprocessing. Refuses (DuplicateColumns) when two columns are
/// multiples of each other unless allow_duplicates is set.
PreprocessResult preprocess(const Matrix& m, const PreprocessOptions& opt = {});

struct AlphaSearch {
  double alpha = 1.0;       // largest alpha found feasible
  double alpha_hi = 1.0;    // smallest alpha found infeasible (== alpha when feasible at 1)
  int vertices = 3;         // vertex count preserved by the search
  int iterations = 0;
};

/// Bisection for the largest alpha in [0, 1] whose rank-3 geometry still
/// admits a polygon with as many vertices as at alpha = 0.
/// Throws RankMismatch unless sigma_4 / sigma_1 <= 1e-9.
/// slack_tol is the feasibility slack allowed at each probe; 0 keeps the
/// returned alpha on the feasible side up to rounding.
AlphaSearch find_alpha_bar_info(const Matrix& m, const Matrix& b_star, double tol_alpha = 1e-4,
                                int max_iter = 40, double slack_tol = 1e-9);
double find_alpha_bar(const Matrix& m, const Matrix& b_star, double tol_alpha = 1e-4);

}  // namespace prenmf
