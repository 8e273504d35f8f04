#include "prenmf/preprocess.hpp"

#include "prenmf/error.hpp"
#include "prenmf/npp3.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace prenmf {

SpectralRadius spectral_radius_info(const Matrix& b, const SpectralOptions& opt) {
  if (b.rows() != b.cols()) throw Error(ErrorCode::InvalidArgument, "spectral radius of a non-square matrix");
  require_finite(b, "B");
  SpectralRadius out;
  const Index n = b.rows();
  if (n == 0 || b.cwiseAbs().maxCoeff() == 0.0) {
    out.converged = true;
    return out;
  }
  if (b.minCoeff() < 0.0) throw Error(ErrorCode::InvalidArgument, "spectral radius expects B >= 0");

  const double col_max = b.colwise().sum().maxCoeff();
  const double mu = opt.shift_factor * col_max;
  Vector x = Vector::Constant(n, 1.0 / static_cast<double>(n));
  double est = 0.0;
  double prev_est = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= opt.max_iter; ++it) {
    const Vector y = b * x + mu * x;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (x(i) <= std::numeric_limits<double>::min()) continue;
      const double r = y(i) / x(i);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    const double total = y.sum();
    est = total - mu;
    const Vector next = y / total;
    const double move = (next - x).lpNorm<1>();
    x = next;
    out.lower = std::max(0.0, lo - mu);
    out.upper = hi - mu;
    out.iterations = it;
    const bool bracket = out.upper - out.lower <= opt.tol * std::max(out.upper, 1e-300);
    const bool settled = std::abs(est - prev_est) <= opt.tol * std::max(est, 1e-300) && move <= opt.tol;
    prev_est = est;
    if (bracket || settled) {
      out.converged = true;
      out.rho = bracket ? 0.5 * (out.lower + out.upper) : est;
      return out;
    }
  }
  if (!opt.dense_fallback) {
    std::ostringstream msg;
    msg << "power iteration stalled after " << opt.max_iter << " steps; rho in [" << out.lower << ", "
        << out.upper << "]";
    throw Error(ErrorCode::NonConvergence, msg.str());
  }
  Eigen::EigenSolver<Matrix> es(b, false);
  out.rho = es.eigenvalues().cwiseAbs().maxCoeff();
  out.used_fallback = true;
  out.converged = true;
  return out;
}

double spectral_radius(const Matrix& b, const SpectralOptions& opt) { return spectral_radius_info(b, opt).rho; }

Matrix apply_alpha(const Matrix& m, const Matrix& b_star, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(ErrorCode::InvalidArgument, "alpha must lie in [0, 1]");
  if (b_star.rows() != m.cols() || b_star.cols() != m.cols()) {
    throw Error(ErrorCode::InvalidArgument, "B* must be n x n");
  }
  if (alpha == 0.0) return m;
  return m - alpha * (m * b_star);
}

Rescaled rescale_columns(const Matrix& p_m, const Matrix& m) {
  if (p_m.rows() != m.rows() || p_m.cols() != m.cols()) {
    throw Error(ErrorCode::InvalidArgument, "rescaling needs matrices of equal shape");
  }
  Rescaled out;
  const Vector pn = p_m.colwise().norm().transpose();
  const Vector mn = m.colwise().norm().transpose();
  const double cutoff = kDefaultDropTol * (pn.size() ? pn.maxCoeff() : 0.0);
  out.d = Vector::Ones(p_m.cols());
  for (Index i = 0; i < p_m.cols(); ++i) {
    if (pn(i) > cutoff && pn(i) > 0.0) out.d(i) = mn(i) / pn(i);
  }
  out.scaled = p_m * out.d.asDiagonal();
  return out;
}

PreprocessResult preprocess(const Matrix& m, const PreprocessOptions& opt) {
  PreprocessResult res;
  res.epsilon = opt.epsilon;
  res.alpha = opt.alpha;
  require_finite(m, "input matrix");
  res.duplicates = detect_duplicates(m);
  if (!opt.allow_duplicates && !res.duplicates.empty()) {
    std::ostringstream msg;
    msg << "columns are multiples of each other:";
    for (const auto& d : res.duplicates) msg << " (" << d.i << ", " << d.j << ")";
    throw Error(ErrorCode::DuplicateColumns, msg.str());
  }
  const ColumnSweep sweep =
      opt.serial ? solve_all_columns_serial(m, opt.epsilon, opt.cls) : solve_all_columns(m, opt.epsilon, opt.cls);
  res.b_star = sweep.b_star;
  res.column_kkt = sweep.kkt;
  res.rho_info = spectral_radius_info(res.b_star, opt.spectral);
  res.rho = res.rho_info.rho;
  res.p_alpha_m = apply_alpha(m, res.b_star, opt.alpha);
  if (opt.rescale) {
    Rescaled r = rescale_columns(res.p_alpha_m, m);
    res.rescale = std::move(r.d);
    res.rescaled = std::move(r.scaled);
  }
  return res;
}

AlphaSearch find_alpha_bar_info(const Matrix& m, const Matrix& b_star, double tol_alpha, int max_iter,
                                double slack_tol) {
  require_finite(m, "input matrix");
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const bool rank3 = s.size() >= 3 && s(0) > 0.0 && s(2) > kDefaultRankTol * s(0) &&
                     (s.size() < 4 || s(3) <= kDefaultRankTol * s(0));
  if (!rank3) throw Error(ErrorCode::RankMismatch, "alpha search needs a rank-3 matrix");

  auto instance = [&](double alpha) { return npp::build_npp(apply_alpha(m, b_star, alpha)); };
  AlphaSearch out;
  out.vertices = npp::min_vertices(instance(0.0));
  auto feasible = [&](double alpha) { return npp::feasible_k(instance(alpha), out.vertices, slack_tol).feasible; };

  if (feasible(1.0)) return out;
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol_alpha && out.iterations < max_iter) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
    ++out.iterations;
  }
  out.alpha = lo;
  out.alpha_hi = hi;
  return out;
}

double find_alpha_bar(const Matrix& m, const Matrix& b_star, double tol_alpha) {
  return find_alpha_bar_info(m, b_star, tol_alpha).alpha;
}

}  // namespace prenmf
