#include "prenmf/cllsolve.hpp"
#include "prenmf/error.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <string>

namespace prenmf {
namespace {

void validate_matrix(const Matrix& m, double epsilon) {
  if (m.cols() < 2 || m.rows() < 1) {
    throw Error(ErrorCode::InvalidArgument, "preprocessing needs at least two columns");
  }
  if (!(epsilon >= 0.0 && epsilon < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "epsilon must lie in [0, 1)");
  }
  require_finite(m, "input matrix");
  if (epsilon == 0.0 && (m.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidArgument, "negative entries require epsilon > 0");
  }
}

// Maps a priority permutation over all n columns to one over the n - 1
// remaining variables.
std::vector<Index> reduced_priority(const std::vector<Index>& priority, Index skip) {
  std::vector<Index> out;
  if (priority.empty()) return out;
  for (Index k : priority) {
    if (k == skip) continue;
    out.push_back(k < skip ? k : k - 1);
  }
  return out;
}

Vector expand(const Vector& x, Index skip) {
  Vector b(x.size() + 1);
  b.head(skip) = x.head(skip);
  b(skip) = 0.0;
  b.tail(x.size() - skip) = x.tail(x.size() - skip);
  return b;
}

CllsSolution solve_column_unchecked(const CllsProblem& p, const ClsOptions& opt) {
  const Index n = p.m->cols();
  if (opt.priority.size() != 0 && static_cast<Index>(opt.priority.size()) != n) {
    throw Error(ErrorCode::InvalidArgument, "priority must list every column once");
  }
  const Matrix c = p.reduced();
  const Vector d = p.target();
  const Vector u = p.upper_bound();

  ActiveSetOptions as;
  as.feas_tol = opt.feas_tol;
  as.kkt_tol = opt.kkt_tol;
  as.max_iter = opt.max_iter > 0 ? opt.max_iter : static_cast<int>(50 * n);
  as.priority = reduced_priority(opt.priority, p.column);
  as.start_with_bounds = opt.start_with_bounds;

  const BoundedLsqResult r = solve_bounded_lsq(c, d, &u, as);

  CllsSolution sol;
  sol.b = expand(r.x, p.column);
  sol.objective = (d - c * r.x).squaredNorm();
  sol.iterations = r.iterations;
  for (Index k : r.active_bounds) sol.active_set.push_back(k < p.column ? k : k + 1);
  for (Index j : r.active_rows) sol.active_set.push_back(n + j);
  sol.kkt_residual = kkt_check(p, sol.b, opt.feas_tol);
  if (sol.kkt_residual > opt.kkt_tol) {
    throw Error(ErrorCode::KktFailure, "KKT residual " + std::to_string(sol.kkt_residual) +
                                           " exceeds tolerance");
  }
  return sol;
}

template <bool Parallel>
ColumnSweep sweep(const Matrix& m, double epsilon, const ClsOptions& opt) {
  validate_matrix(m, epsilon);
  const Index n = m.cols();
  ColumnSweep out;
  out.b_star = Matrix::Zero(n, n);
  out.kkt = Vector::Zero(n);
  out.iterations.assign(static_cast<std::size_t>(n), 0);
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(n));

  auto one = [&](Index i) {
    try {
      const CllsSolution s = solve_column_unchecked({&m, i, epsilon}, opt);
      out.b_star.col(i) = s.b;
      out.kkt(i) = s.kkt_residual;
      out.iterations[static_cast<std::size_t>(i)] = s.iterations;
    } catch (...) {
      failures[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic)
    for (Index i = 0; i < n; ++i) one(i);
  } else {
    for (Index i = 0; i < n; ++i) one(i);
  }

  for (Index i = 0; i < n; ++i) {
    if (!failures[static_cast<std::size_t>(i)]) continue;
    try {
      std::rethrow_exception(failures[static_cast<std::size_t>(i)]);
    } catch (const Error& e) {
      throw Error(e.code(), "column " + std::to_string(i) + ": " + e.detail());
    }
  }
  return out;
}

}  // namespace

Vector CllsProblem::upper_bound() const {
  const Vector d = target();
  const double d_inf = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;
  return d.array() + epsilon * d_inf;
}

Matrix CllsProblem::reduced() const {
  const Index n = m->cols();
  Matrix c(m->rows(), n - 1);
  c.leftCols(column) = m->leftCols(column);
  c.rightCols(n - 1 - column) = m->rightCols(n - 1 - column);
  return c;
}

CllsSolution solve_column(const CllsProblem& p, const ClsOptions& opt) {
  if (!p.m) throw Error(ErrorCode::InvalidArgument, "problem has no matrix");
  if (p.column < 0 || p.column >= p.m->cols()) {
    throw Error(ErrorCode::InvalidArgument, "column index out of range");
  }
  validate_matrix(*p.m, p.epsilon);
  return solve_column_unchecked(p, opt);
}

double kkt_check(const CllsProblem& p, const Vector& b, double feas_tol) {
  const Index n = p.m->cols();
  if (b.size() != n) throw Error(ErrorCode::InvalidArgument, "b has the wrong length");
  const Matrix c = p.reduced();
  const Vector d = p.target();
  const Vector u = p.upper_bound();
  const double d_inf = d.size() ? d.cwiseAbs().maxCoeff() : 0.0;

  Vector x(n - 1);
  x << b.head(p.column), b.tail(n - 1 - p.column);
  const double x_scale = std::max(1.0, x.size() ? x.cwiseAbs().maxCoeff() : 0.0);
  const double feas_x = feas_tol * x_scale;
  const double feas_row = feas_tol * std::max(d_inf, std::numeric_limits<double>::min());

  if (std::abs(b(p.column)) > feas_x) throw Error(ErrorCode::InfeasiblePoint, "b_i must be zero");
  if ((x.array() < -feas_x).any()) throw Error(ErrorCode::InfeasiblePoint, "b has negative entries");
  const Vector cx = c * x;
  if (((cx - u).array() > feas_row).any()) {
    throw Error(ErrorCode::InfeasiblePoint, "M b exceeds the upper bound");
  }

  const Vector g = 2.0 * c.transpose() * (cx - d);
  const double col_max = c.size() ? c.colwise().norm().maxCoeff() : 0.0;
  const double scale = 2.0 * d.norm() * col_max;
  if (scale == 0.0) return g.norm();

  // Normals of the active constraints, written as h(x) <= 0.
  std::vector<Vector> normals;
  std::vector<double> slack, slack_scale;
  for (Index k = 0; k < x.size(); ++k) {
    if (x(k) <= feas_x) {
      normals.push_back(-Vector::Unit(x.size(), k));
      slack.push_back(x(k));
      slack_scale.push_back(x_scale);
    }
  }
  for (Index j = 0; j < c.rows(); ++j) {
    if (u(j) - cx(j) <= feas_row) {
      normals.push_back(c.row(j).transpose());
      slack.push_back(u(j) - cx(j));
      slack_scale.push_back(std::max(d_inf, std::numeric_limits<double>::min()));
    }
  }
  Matrix nmat(x.size(), static_cast<Index>(normals.size()));
  for (std::size_t w = 0; w < normals.size(); ++w) nmat.col(static_cast<Index>(w)) = normals[w];

  const Vector lambda = nnls_lawson_hanson(nmat, -g);
  const double stationarity = (-g - nmat * lambda).norm() / scale;
  double complementarity = 0.0;
  for (std::size_t w = 0; w < normals.size(); ++w) {
    const double viol = lambda(static_cast<Index>(w)) * normals[w].norm() * std::abs(slack[w]) /
                        (scale * slack_scale[w]);
    complementarity = std::max(complementarity, viol);
  }
  return std::max(stationarity, complementarity);
}

ColumnSweep solve_all_columns(const Matrix& m, double epsilon, const ClsOptions& opt) {
  return sweep<true>(m, epsilon, opt);
}

ColumnSweep solve_all_columns_serial(const Matrix& m, double epsilon, const ClsOptions& opt) {
  return sweep<false>(m, epsilon, opt);
}

Matrix preprocess_matrix(const Matrix& m, double epsilon, const ClsOptions& opt) {
  return solve_all_columns(m, epsilon, opt).b_star;
}

Matrix preprocess_matrix_serial(const Matrix& m, double epsilon, const ClsOptions& opt) {
  return solve_all_columns_serial(m, epsilon, opt).b_star;
}

}  // namespace prenmf
