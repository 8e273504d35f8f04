#include "prenmf/cllsolve.hpp"
#include "prenmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace prenmf {
namespace {

// Constraints are keyed for tie-breaking: bound k has key rank[k], row j has
// key p + j.
struct Candidate {
  bool is_row = false;
  Index index = -1;
  Index key = std::numeric_limits<Index>::max();
};

Matrix gather_cols(const Matrix& c, const std::vector<Index>& cols) {
  Matrix out(c.rows(), static_cast<Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) out.col(static_cast<Index>(k)) = c.col(cols[k]);
  return out;
}

Matrix gather_block(const Matrix& c, const std::vector<Index>& rows, const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out(static_cast<Index>(a), static_cast<Index>(b)) = c(rows[a], cols[b]);
    }
  }
  return out;
}

}  // namespace

BoundedLsqResult solve_bounded_lsq(const Matrix& c, const Vector& d, const Vector* upper,
                                   const ActiveSetOptions& opt) {
  const Index m = c.rows();
  const Index p = c.cols();
  if (d.size() != m) throw Error(ErrorCode::InvalidArgument, "target length does not match rows");
  if (upper && upper->size() != m) throw Error(ErrorCode::InvalidArgument, "bound length does not match rows");

  BoundedLsqResult res;
  res.x = Vector::Zero(p);
  const double d_inf = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
  if (p == 0 || d_inf == 0.0) {
    for (Index k = 0; k < p; ++k) res.active_bounds.push_back(k);
    return res;
  }
  const double feas_abs = opt.feas_tol * d_inf;
  if (upper && (upper->array() < -feas_abs).any()) {
    throw Error(ErrorCode::Infeasible, "x = 0 violates the upper bound");
  }

  std::vector<Index> rank(static_cast<std::size_t>(p));
  if (opt.priority.empty()) {
    std::iota(rank.begin(), rank.end(), Index{0});
  } else {
    if (static_cast<Index>(opt.priority.size()) != p) {
      throw Error(ErrorCode::InvalidArgument, "priority must be a permutation of the variables");
    }
    for (Index k = 0; k < p; ++k) rank[static_cast<std::size_t>(opt.priority[static_cast<std::size_t>(k)])] = k;
  }

  const double d_norm = d.norm();
  const double col_max = c.colwise().norm().maxCoeff();
  const double grad_scale = 2.0 * d_norm * std::max(col_max, std::numeric_limits<double>::min());
  // Release constraints well before the certificate would object: several
  // multipliers just inside -kkt_tol can add up past it in the norm check.
  const double drop_thresh = -1e-2 * opt.kkt_tol * grad_scale;
  const double stationary_thresh = 1e-12 * d_norm;
  const int max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(50 * (p + 1));

  std::vector<char> free_var(static_cast<std::size_t>(p), opt.start_with_bounds ? 0 : 1);
  std::vector<char> row_on(static_cast<std::size_t>(m), 0);
  bool degenerate = false;

  for (int iter = 0; iter < max_iter; ++iter) {
    res.iterations = iter + 1;
    const Vector cx = c * res.x;
    const Vector r = d - cx;

    std::vector<Index> f, j_rows;
    for (Index k = 0; k < p; ++k) {
      if (free_var[static_cast<std::size_t>(k)]) f.push_back(k);
    }
    for (Index j = 0; j < m; ++j) {
      if (row_on[static_cast<std::size_t>(j)]) j_rows.push_back(j);
    }

    Vector step = Vector::Zero(p);
    Matrix a_block;  // active rows restricted to free variables
    if (!f.empty()) {
      const auto nf = static_cast<Index>(f.size());
      const auto nj = static_cast<Index>(j_rows.size());
      Matrix z;
      if (j_rows.empty()) {
        z = Matrix::Identity(nf, nf);
      } else {
        a_block = gather_block(c, j_rows, f);
        Eigen::ColPivHouseholderQR<Matrix> qr(a_block.transpose());
        const Index rk = qr.rank();
        if (rk < nf) {
          const Matrix q = qr.householderQ();
          z = q.rightCols(nf - rk);
        }
        (void)nj;
      }
      if (z.cols() > 0) {
        const Matrix g = gather_cols(c, f) * z;
        Eigen::CompleteOrthogonalDecomposition<Matrix> cod;
        cod.setThreshold(1e-12);
        cod.compute(g);
        const Vector zz = cod.solve(r);
        const Vector pf = z * zz;
        for (Index k = 0; k < nf; ++k) step(f[static_cast<std::size_t>(k)]) = pf(k);
      }
    }
    const Vector cstep = c * step;

    if (cstep.norm() <= stationary_thresh) {
      // Stationary on the current face: inspect multipliers.
      const Vector g = -2.0 * c.transpose() * r;
      Vector lambda;
      if (!j_rows.empty()) {
        if (a_block.size() == 0) a_block = gather_block(c, j_rows, f);
        Vector gf(static_cast<Index>(f.size()));
        for (std::size_t k = 0; k < f.size(); ++k) gf(static_cast<Index>(k)) = g(f[k]);
        lambda = a_block.transpose().colPivHouseholderQr().solve(-gf);
      }
      Candidate drop;
      double drop_val = drop_thresh;
      auto consider = [&](bool is_row, Index idx, Index key, double mult) {
        if (mult >= drop_thresh) return;
        const bool better = degenerate ? key < drop.key
                                       : (mult < drop_val || (mult == drop_val && key < drop.key));
        if (drop.index < 0 || better) {
          drop = {is_row, idx, key};
          drop_val = mult;
        }
      };
      for (std::size_t a = 0; a < j_rows.size(); ++a) {
        consider(true, j_rows[a], p + j_rows[a], lambda(static_cast<Index>(a)));
      }
      for (Index k = 0; k < p; ++k) {
        if (free_var[static_cast<std::size_t>(k)]) continue;
        double mu = g(k);
        for (std::size_t a = 0; a < j_rows.size(); ++a) mu += lambda(static_cast<Index>(a)) * c(j_rows[a], k);
        consider(false, k, rank[static_cast<std::size_t>(k)], mu);
      }
      if (drop.index < 0) {
        for (Index k = 0; k < p; ++k) {
          if (!free_var[static_cast<std::size_t>(k)]) res.active_bounds.push_back(k);
        }
        res.active_rows = j_rows;
        return res;
      }
      if (drop.is_row) {
        row_on[static_cast<std::size_t>(drop.index)] = 0;
      } else {
        free_var[static_cast<std::size_t>(drop.index)] = 1;
      }
      continue;
    }

    // Ratio test along the step; lowest key wins ties.
    double alpha = 1.0;
    Candidate block;
    const double step_norm = step.norm();
    auto offer = [&](double ratio, bool is_row, Index idx, Index key) {
      constexpr double tie = 1e-14;
      ratio = std::max(0.0, ratio);
      const bool smaller = ratio < alpha - tie;
      const bool tied = std::abs(ratio - alpha) <= tie && (block.index < 0 || key < block.key);
      if (smaller || tied) {
        alpha = std::min(ratio, alpha);
        block = {is_row, idx, key};
      }
    };
    for (Index k : f) {
      if (step(k) < 0.0) offer(res.x(k) / -step(k), false, k, rank[static_cast<std::size_t>(k)]);
    }
    if (upper) {
      for (Index j = 0; j < m; ++j) {
        if (row_on[static_cast<std::size_t>(j)]) continue;
        const double rate = cstep(j);
        if (rate <= 1e-14 * c.row(j).norm() * step_norm) continue;
        offer(((*upper)(j) - cx(j)) / rate, true, j, p + j);
      }
    }
    res.x += alpha * step;
    for (Index k : f) {
      if (res.x(k) < 0.0) res.x(k) = 0.0;
    }
    if (block.index >= 0) {
      if (block.is_row) {
        row_on[static_cast<std::size_t>(block.index)] = 1;
      } else {
        free_var[static_cast<std::size_t>(block.index)] = 0;
        res.x(block.index) = 0.0;
      }
    }
    degenerate = alpha * step_norm <= 1e-14 * std::max(1.0, res.x.norm());
  }
  throw Error(ErrorCode::MaxIterations,
              "active-set iteration cap of " + std::to_string(max_iter) + " reached");
}

}  // namespace prenmf
