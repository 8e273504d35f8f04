#include "prenmf/nmf.hpp"

#include "prenmf/cllsolve.hpp"
#include "prenmf/error.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <random>

namespace prenmf {
namespace {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

int inner_repeats(Index m, Index n, Index r, double alpha) {
  const double ratio = static_cast<double>(m) * static_cast<double>(n) / (static_cast<double>(r) * (m + n));
  return 1 + static_cast<int>(std::floor(alpha * ratio));
}

// One HALS sweep over the columns of x for min ||target - x y||, where
// a = target y^T and b = y y^T. Returns the Frobenius size of the change.
double sweep_columns(Matrix& x, const Matrix& a, const Matrix& b, const Mask* mask, double snap) {
  double change = 0.0;
  for (Index k = 0; k < x.cols(); ++k) {
    const double bkk = b(k, k);
    if (bkk <= 0.0) continue;
    Vector next = (x.col(k) + (a.col(k) - x * b.col(k)) / bkk).cwiseMax(0.0);
    if (mask) next = mask->col(k).select(next, 0.0);
    next = (next.array() < snap).select(0.0, next);
    change += (next - x.col(k)).squaredNorm();
    x.col(k) = next;
  }
  return std::sqrt(change);
}

// Repeated sweeps until the step falls below inner_stop times the first one.
void update_block(Matrix& x, const Matrix& a, const Matrix& b, const Mask* mask, int repeats, const AhalsOptions& opt) {
  double first = 0.0;
  for (int l = 0; l < repeats; ++l) {
    const double step = sweep_columns(x, a, b, mask, opt.snap);
    if (l == 0) first = step;
    if (step <= opt.inner_stop * first || first == 0.0) break;
  }
}

FactorPair finish(const Matrix& m, Matrix u, Matrix v, double zero_tol) {
  FactorPair f;
  f.r = u.cols();
  f.rel_error = relative_error(m, u, v);
  f.s_u = sparsity(u, zero_tol);
  f.s_v = sparsity(v, zero_tol);
  f.rank_warning = f.r > std::min(m.rows(), m.cols());
  f.u = std::move(u);
  f.v = std::move(v);
  return f;
}

void check_rank(const Matrix& m, Index r) {
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "rank must be at least 1");
  if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty input matrix");
  require_finite(m, "input matrix");
}

// Exact minimizer of a ||u - c||^2 + mu sum(u) over u >= 0, max(u) = 1.
// Cheapest entry to lift to one is the largest g.
Vector capped_column(const Vector& c, double a, double mu) {
  const Vector g = c.array() - mu / (2.0 * a);
  Vector u = g.cwiseMax(0.0).cwiseMin(1.0);
  Index top = 0;
  if (g.maxCoeff(&top) < 1.0) u(top) = 1.0;
  return u;
}

// Positive part of the residual column with the largest norm, scaled to max 1.
Vector reseed_column(const Matrix& m, const Matrix& u, const Matrix& v, Index k, std::uint64_t seed) {
  const Matrix resid = m - u * v + u.col(k) * v.row(k);
  const Matrix pos = resid.cwiseMax(0.0);
  Index best = 0;
  const double norm = pos.colwise().norm().maxCoeff(&best);
  if (norm > 0.0) {
    const Vector col = pos.col(best);
    return col / col.maxCoeff();
  }
  Vector e = Vector::Zero(m.rows());
  e(static_cast<Index>((seed + static_cast<std::uint64_t>(k)) % static_cast<std::uint64_t>(m.rows()))) = 1.0;
  return e;
}

}  // namespace

void random_init(const Matrix& m, Index r, std::uint64_t seed, Matrix& u, Matrix& v) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  u.resize(m.rows(), r);
  v.resize(r, m.cols());
  for (Index j = 0; j < r; ++j) {
    for (Index i = 0; i < m.rows(); ++i) u(i, j) = unif(rng);
  }
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < r; ++i) v(i, j) = unif(rng);
  }
  // Best scalar fit of UV to M; makes the run scale-equivariant.
  const Matrix uv = u * v;
  const double denom = uv.squaredNorm();
  const double lambda = denom > 0.0 ? (m.array() * uv.array()).sum() / denom : 0.0;
  if (lambda > 0.0) {
    u *= std::sqrt(lambda);
    v *= std::sqrt(lambda);
  }
}

FactorPair ahals_from(const Matrix& m, Matrix u, Matrix v, const AhalsOptions& opt, const Mask& u_mask) {
  const Index r = u.cols();
  const Mask* mask = u_mask.size() ? &u_mask : nullptr;
  if (mask) u = mask->select(u, 0.0);
  const int rep_u = inner_repeats(m.rows(), m.cols(), r, opt.alpha);
  const int rep_v = inner_repeats(m.cols(), m.rows(), r, opt.alpha);
  std::vector<double> trace;
  if (opt.trace) trace.push_back((m - u * v).squaredNorm());
  // Below this the residual is rounding noise and further sweeps only jitter it.
  const double floor = std::pow(64.0 * std::numeric_limits<double>::epsilon(), 2) * m.squaredNorm();
  int it = 0;
  for (; it < opt.max_outer; ++it) {
    {
      const Matrix a = m * v.transpose();
      const Matrix b = v * v.transpose();
      update_block(u, a, b, mask, rep_u, opt);
    }
    {
      // Rows of V are columns of V^T against M^T.
      Matrix vt = v.transpose();
      const Matrix a = m.transpose() * u;
      const Matrix b = u.transpose() * u;
      update_block(vt, a, b, nullptr, rep_v, opt);
      v = vt.transpose();
    }
    const double obj = (m - u * v).squaredNorm();
    if (opt.trace) trace.push_back(obj);
    if (obj <= floor) {
      ++it;
      break;
    }
  }
  FactorPair f = finish(m, std::move(u), std::move(v), opt.zero_tol);
  f.iterations = it;
  f.objective = std::move(trace);
  return f;
}

FactorPair ahals(const Matrix& m, Index r, std::uint64_t seed, const AhalsOptions& opt) {
  check_rank(m, r);
  Matrix u, v;
  random_init(m, r, seed, u, v);
  FactorPair f = ahals_from(m, std::move(u), std::move(v), opt);
  f.seed = seed;
  return f;
}

FactorPair snmf(const Matrix& m, Index r, const SnmfConfig& cfg, const AhalsOptions& opt) {
  check_rank(m, r);
  if (cfg.mu.size() != r || (cfg.mu.array() <= 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "snmf needs r positive penalty weights");
  }
  Matrix u, v;
  random_init(m, r, cfg.seed, u, v);
  for (Index k = 0; k < r; ++k) {
    const double top = u.col(k).maxCoeff();
    if (top > 0.0) {
      u.col(k) /= top;
      v.row(k) *= top;
    }
  }
  auto objective = [&] { return (m - u * v).squaredNorm() + (u.colwise().sum().transpose().cwiseProduct(cfg.mu)).sum(); };
  const int rep_v = inner_repeats(m.cols(), m.rows(), r, opt.alpha);
  std::vector<double> trace;
  if (opt.trace) trace.push_back(objective());
  int reseeds = 0;
  int it = 0;
  for (; it < cfg.max_outer; ++it) {
    {
      const Matrix a = m * v.transpose();
      const Matrix b = v * v.transpose();
      for (Index k = 0; k < r; ++k) {
        if (b(k, k) <= 0.0) {
          u.col(k) = reseed_column(m, u, v, k, cfg.seed);
          ++reseeds;
          continue;
        }
        const Vector c = u.col(k) + (a.col(k) - u * b.col(k)) / b(k, k);
        u.col(k) = capped_column(c, b(k, k), cfg.mu(k));
      }
    }
    {
      Matrix vt = v.transpose();
      const Matrix a = m.transpose() * u;
      const Matrix b = u.transpose() * u;
      update_block(vt, a, b, nullptr, rep_v, opt);
      v = vt.transpose();
    }
    if (opt.trace) trace.push_back(objective());
  }
  FactorPair f = finish(m, std::move(u), std::move(v), opt.zero_tol);
  f.iterations = it;
  f.seed = cfg.seed;
  f.reseeded_columns = reseeds;
  f.objective = std::move(trace);
  return f;
}

MuTuning tune_mu(const Matrix& m, Index r, double target_su, std::uint64_t seed, int max_outer, int max_probes,
                 double zero_tol) {
  if (!(target_su >= 0.0 && target_su < 1.0)) throw Error(ErrorCode::InvalidArgument, "target sparsity must lie in [0, 1)");
  check_rank(m, r);
  // A weight near 2 ||V_k:||^2 pushes whole columns to single spikes.
  const double ref = 2.0 * m.squaredNorm() / static_cast<double>(r);
  double log_lo = std::log(1e-6 * ref), log_hi = std::log(10.0 * ref);
  AhalsOptions opt;
  opt.zero_tol = zero_tol;

  MuTuning best;
  best.gap = std::numeric_limits<double>::infinity();
  auto probe = [&](double log_mu) {
    SnmfConfig cfg{Vector::Constant(r, std::exp(log_mu)), max_outer, seed};
    FactorPair f = snmf(m, r, cfg, opt);
    const double gap = std::abs(f.s_u - target_su);
    ++best.probes;
    const double achieved = f.s_u;
    if (gap < best.gap) {
      best.gap = gap;
      best.achieved = achieved;
      best.config = cfg;
      best.factors = std::move(f);
    }
    return achieved;
  };
  constexpr double kMatch = 0.02;
  if (probe(log_lo) >= target_su - kMatch || best.probes >= max_probes) return best;
  if (probe(log_hi) < target_su - kMatch || best.gap <= kMatch) return best;
  while (best.probes < max_probes && best.gap > kMatch) {
    const double mid = 0.5 * (log_lo + log_hi);
    (probe(mid) < target_su ? log_lo : log_hi) = mid;
  }
  return best;
}

double nnls_residual(const Matrix& a, const Vector& b, const Vector& x) {
  const Vector g = a.transpose() * (a * x - b);
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) worst = std::max(worst, x(i) > 0.0 ? std::abs(g(i)) : std::max(0.0, -g(i)));
  const double scale = (a.size() ? a.colwise().norm().maxCoeff() : 0.0) * b.norm();
  return scale > 0.0 ? worst / scale : worst;
}

namespace {

template <bool Parallel>
Refit refit(const Matrix& m, const Matrix& u) {
  if (u.rows() != m.rows()) throw Error(ErrorCode::InvalidArgument, "U and M need the same number of rows");
  if (u.size() && u.minCoeff() < 0.0) throw Error(ErrorCode::InvalidArgument, "refit expects U >= 0");
  Refit out;
  out.v = Matrix::Zero(u.cols(), m.cols());
  Vector kkt = Vector::Zero(m.cols());
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(m.cols()));
  auto one = [&](Index j) {
    try {
      const Vector d = m.col(j);
      const BoundedLsqResult r = solve_bounded_lsq(u, d, nullptr);
      out.v.col(j) = r.x;
      kkt(j) = nnls_residual(u, d, r.x);
    } catch (...) {
      failures[static_cast<std::size_t>(j)] = std::current_exception();
    }
  };
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Index j = 0; j < m.cols(); ++j) one(j);
  } else {
    for (Index j = 0; j < m.cols(); ++j) one(j);
  }
  for (Index j = 0; j < m.cols(); ++j) {
    if (!failures[static_cast<std::size_t>(j)]) continue;
    try {
      std::rethrow_exception(failures[static_cast<std::size_t>(j)]);
    } catch (const Error& e) {
      throw Error(e.code(), "refit column " + std::to_string(j) + ": " + e.detail());
    }
  }
  out.kkt = kkt.size() ? kkt.maxCoeff() : 0.0;
  return out;
}

}  // namespace

Refit refit_v(const Matrix& m, const Matrix& u) { return refit<true>(m, u); }
Refit refit_v_serial(const Matrix& m, const Matrix& u) { return refit<false>(m, u); }

VFromQ v_from_q(const Matrix& vp, const Matrix& b_star, double alpha) {
  const Index n = b_star.rows();
  if (b_star.cols() != n || vp.cols() != n) throw Error(ErrorCode::InvalidArgument, "V' must have as many columns as B*");
  VFromQ out;
  out.rho = alpha * spectral_radius(b_star);
  if (out.rho >= 1.0) {
    throw Error(ErrorCode::SingularQ, "rho(alpha B*) = " + std::to_string(out.rho) + " >= 1");
  }
  out.ill_conditioned = out.rho > 0.99;
  const Matrix q = Matrix::Identity(n, n) - alpha * b_star;
  // V Q = V'  <=>  Q^T V^T = V'^T
  out.v = q.transpose().partialPivLu().solve(vp.transpose()).transpose();
  out.min_entry = out.v.size() ? out.v.minCoeff() : 0.0;
  out.v = out.v.cwiseMax(0.0);
  return out;
}

FactorPair postprocess_fixed_support(const Matrix& m, const Matrix& u, const Matrix& v, int extra_iters,
                                     double zero_tol) {
  const double cut = zero_tol * (u.size() ? u.cwiseAbs().maxCoeff() : 0.0);
  const Mask mask = u.array() > cut;
  AhalsOptions opt;
  opt.max_outer = extra_iters;
  opt.zero_tol = zero_tol;
  FactorPair out = ahals_from(m, u, v, opt, mask);
  const double before = relative_error(m, u, v);
  if (out.rel_error > before) {
    FactorPair same = finish(m, u, v, zero_tol);
    same.iterations = 0;
    return same;
  }
  return out;
}

std::string method_name(Method m) {
  switch (m) {
    case Method::Nmf: return "nmf";
    case Method::PreNmf: return "pre-nmf";
    case Method::Snmf: return "snmf";
  }
  return "nmf";
}

Method method_from_string(const std::string& s) {
  if (s == "nmf") return Method::Nmf;
  if (s == "pre-nmf" || s == "pre_nmf") return Method::PreNmf;
  if (s == "snmf") return Method::Snmf;
  throw Error(ErrorCode::InvalidArgument, "unknown method '" + s + "'");
}

PipelineRecord run_pipeline(const Matrix& m, Index r, const PipelineOptions& opt) {
  check_rank(m, r);
  if (opt.seeds.empty()) throw Error(ErrorCode::InvalidArgument, "at least one seed is needed");
  const auto start = std::chrono::steady_clock::now();
  PipelineRecord rec;
  rec.method = opt.method;
  rec.epsilon = opt.epsilon;
  rec.alpha = opt.alpha;

  AhalsOptions hals;
  hals.max_outer = opt.max_outer;
  hals.zero_tol = opt.zero_tol;

  std::optional<PreprocessResult> pre;
  Vector d_inv;
  if (opt.method == Method::PreNmf) {
    PreprocessOptions po;
    po.epsilon = opt.epsilon;
    po.alpha = opt.alpha;
    po.rescale = true;
    po.allow_duplicates = opt.allow_duplicates;
    pre = preprocess(m, po);
    rec.rho = pre->rho;
    d_inv = pre->rescale->cwiseInverse();
  }

  struct Candidate {
    FactorPair plain;
    std::optional<double> vq;
    double mu = 0.0;
    double gap = 0.0;
  };
  const std::size_t count = opt.seeds.size();
  std::vector<Candidate> cand(count);
  std::vector<std::exception_ptr> failures(count);
  auto one = [&](std::size_t s) {
    try {
      const std::uint64_t seed = opt.seeds[s];
      Candidate c;
      switch (opt.method) {
        case Method::Nmf:
          c.plain = ahals(m, r, seed, hals);
          break;
        case Method::PreNmf: {
          const FactorPair f = ahals(*pre->rescaled, r, seed, hals);
          const Refit fit = refit_v_serial(m, f.u);
          c.plain = finish(m, f.u, fit.v, opt.zero_tol);
          c.plain.seed = seed;
          c.plain.iterations = f.iterations;
          // With epsilon > 0, Q may be singular; then there is no V' Q^{-1} figure.
          if (opt.alpha * pre->rho < 1.0) {
            const VFromQ vq = v_from_q(f.v * d_inv.asDiagonal(), pre->b_star, opt.alpha);
            c.vq = relative_error(m, f.u, vq.v);
          }
          break;
        }
        case Method::Snmf: {
          MuTuning t = tune_mu(m, r, opt.target_su, seed, opt.max_outer, 20, opt.zero_tol);
          c.plain = std::move(t.factors);
          c.mu = t.config.mu(0);
          c.gap = t.gap;
          break;
        }
      }
      cand[s] = std::move(c);
    } catch (...) {
      failures[s] = std::current_exception();
    }
  };
  if (opt.serial) {
    for (std::size_t s = 0; s < count; ++s) one(s);
  } else {
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < count; ++s) one(s);
  }
  for (std::size_t s = 0; s < count; ++s) {
    if (!failures[s]) continue;
    try {
      std::rethrow_exception(failures[s]);
    } catch (const Error& e) {
      throw Error(e.code(), method_name(opt.method) + ", seed " + std::to_string(opt.seeds[s]) + ": " + e.detail());
    }
  }

  // Lowest error wins; for snmf only runs that met the sparsity target count
  // unless none did. Ties keep the earlier seed.
  auto better = [&](const Candidate& a, const Candidate& b) {
    if (opt.method == Method::Snmf) {
      const bool ma = a.gap <= 0.02, mb = b.gap <= 0.02;
      if (ma != mb) return ma;
      if (!ma) return a.gap < b.gap;
    }
    return a.plain.rel_error < b.plain.rel_error;
  };
  std::size_t best = 0;
  for (std::size_t s = 1; s < count; ++s) {
    if (better(cand[s], cand[best])) best = s;
  }
  Candidate& win = cand[best];
  rec.improved = postprocess_fixed_support(m, win.plain.u, win.plain.v, opt.extra_iters, opt.zero_tol);
  rec.improved.seed = win.plain.seed;
  rec.plain = std::move(win.plain);
  rec.rel_error_vq = win.vq;
  if (opt.method == Method::Snmf) {
    rec.mu = win.mu;
    rec.sparsity_gap = win.gap;
  }
  rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

}  // namespace prenmf
