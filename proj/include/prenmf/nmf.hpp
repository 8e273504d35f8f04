#pragma once

#include "prenmf/matcore.hpp"
#include "prenmf/preprocess.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace prenmf {

struct FactorPair {
  Matrix u;  // m x r
  Matrix v;  // r x n
  Index r = 0;
  double rel_error = 0.0;
  double s_u = 0.0;
  double s_v = 0.0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool rank_warning = false;   // r > min(m, n)
  int reseeded_columns = 0;    // snmf only
  std::vector<double> objective;  // per outer iteration, when traced
};

struct AhalsOptions {
  int max_outer = 1000;
  double alpha = 0.5;       // inner repetitions: 1 + floor(alpha * mn / (r (m + n)))
  double inner_stop = 0.1;  // stop inner sweeps once the step shrinks below this fraction of the first
  double snap = 1e-16;      // entries below this become exact zeros
  double zero_tol = kDefaultZeroTol;
  bool trace = false;
};

/// Uniform [0, 1) factors from seed, scaled so that U V best matches M.
void random_init(const Matrix& m, Index r, std::uint64_t seed, Matrix& u, Matrix& v);

/// Accelerated HALS. U columns are swept in ascending order, then V rows.
/// M may hold negative entries; updates clip at zero.
FactorPair ahals(const Matrix& m, Index r, std::uint64_t seed, const AhalsOptions& opt = {});

/// Continues A-HALS from given factors. Entries where the mask is false are
/// held at zero in U (mask may be empty for no restriction).
FactorPair ahals_from(const Matrix& m, Matrix u, Matrix v, const AhalsOptions& opt,
                      const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& u_mask = {});

struct SnmfConfig {
  Vector mu;  // one positive weight per column of U
  int max_outer = 1000;
  std::uint64_t seed = 0;
};

/// min ||M - UV||_F^2 + sum_k mu_k ||U_:k||_1 with max(U_:k) = 1 for all k.
/// Each U column is updated by the exact minimizer of its block under the
/// max constraint, so every column keeps an entry equal to one. A column whose
/// V row has died is reseeded from the positive residual.
FactorPair snmf(const Matrix& m, Index r, const SnmfConfig& cfg, const AhalsOptions& opt = {});

struct MuTuning {
  SnmfConfig config;
  FactorPair factors;
  double achieved = 0.0;  // s(U)
  double gap = 0.0;       // |achieved - target|
  int probes = 0;
};

/// Log-scale bisection on a uniform mu for s(U) within 0.02 of target.
MuTuning tune_mu(const Matrix& m, Index r, double target_su, std::uint64_t seed, int max_outer = 1000,
                 int max_probes = 20, double zero_tol = kDefaultZeroTol);

struct Refit {
  Matrix v;
  double kkt = 0.0;  // worst per-column NNLS residual
};

/// V = argmin_{X >= 0} ||M - U X||_F, one NNLS per column (OpenMP).
Refit refit_v(const Matrix& m, const Matrix& u);
Refit refit_v_serial(const Matrix& m, const Matrix& u);

/// Relative NNLS optimality residual of x for min ||A x - b||, x >= 0.
double nnls_residual(const Matrix& a, const Vector& b, const Vector& x);

struct VFromQ {
  Matrix v;
  double rho = 0.0;          // spectral radius of alpha B*
  double min_entry = 0.0;    // smallest entry before clipping
  bool ill_conditioned = false;  // rho > 0.99
};

/// V = Vp (I - alpha B*)^{-1}, negatives clipped. Throws SingularQ when
/// rho(alpha B*) >= 1.
VFromQ v_from_q(const Matrix& vp, const Matrix& b_star, double alpha);

/// Keeps the zeros of U (entries <= zero_tol max|U|) and runs extra A-HALS
/// sweeps on the rest. Never returns a worse error than the input.
FactorPair postprocess_fixed_support(const Matrix& m, const Matrix& u, const Matrix& v, int extra_iters = 100,
                                     double zero_tol = kDefaultZeroTol);

enum class Method { Nmf, PreNmf, Snmf };

std::string method_name(Method m);
Method method_from_string(const std::string& s);

struct PipelineOptions {
  Method method = Method::Nmf;
  double epsilon = 0.0;       // pre-nmf
  double alpha = 1.0;         // pre-nmf
  double target_su = 0.0;     // snmf
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  int max_outer = 1000;
  int extra_iters = 100;
  double zero_tol = kDefaultZeroTol;
  bool allow_duplicates = false;
  bool serial = false;        // run seeds one after another
};

struct PipelineRecord {
  Method method = Method::Nmf;
  double epsilon = 0.0;
  double alpha = 1.0;
  FactorPair plain;
  FactorPair improved;
  std::optional<double> rel_error_vq;  // pre-nmf: error of (U, V' Q^{-1}); unset when Q is singular
  std::optional<double> rho;           // pre-nmf: rho(B*)
  std::optional<double> mu;            // snmf: tuned weight
  std::optional<double> sparsity_gap;  // snmf: |s(U) - target|
  double wall_time = 0.0;
};

/// Best-of-seeds run of one method with plain and fixed-support errors.
PipelineRecord run_pipeline(const Matrix& m, Index r, const PipelineOptions& opt);

}  // namespace prenmf
