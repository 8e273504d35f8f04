#include "prenmf/matcore.hpp"

#include "prenmf/error.hpp"

#include <algorithm>
#include <cmath>

namespace prenmf {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::AllColumnsZero: return "AllColumnsZero";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::InfeasiblePoint: return "InfeasiblePoint";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::KktFailure: return "KktFailure";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::RankMismatch: return "RankMismatch";
    case ErrorCode::DegenerateChart: return "DegenerateChart";
    case ErrorCode::EmptyOuter: return "EmptyOuter";
    case ErrorCode::StartInsideQ: return "StartInsideQ";
    case ErrorCode::SingularQ: return "SingularQ";
    case ErrorCode::DuplicateColumns: return "DuplicateColumns";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

Pullback pullback(const Matrix& x, double drop_tol) {
  if (x.rows() < 1 || x.cols() < 1) {
    throw Error(ErrorCode::InvalidArgument, "pullback of an empty matrix");
  }
  const Vector l1 = x.cwiseAbs().colwise().sum().transpose();
  const double cutoff = drop_tol * l1.maxCoeff();

  Pullback out;
  for (Index j = 0; j < x.cols(); ++j) {
    if (l1(j) > cutoff && l1(j) > 0.0) out.kept.push_back(j);
  }
  if (out.kept.empty()) {
    throw Error(ErrorCode::AllColumnsZero, "every column is below the drop tolerance");
  }
  const auto k = static_cast<Index>(out.kept.size());
  out.theta.resize(x.rows(), k);
  out.scale.resize(k);
  for (Index c = 0; c < k; ++c) {
    const Index j = out.kept[static_cast<std::size_t>(c)];
    out.scale(c) = 1.0 / l1(j);
    out.theta.col(c) = x.col(j) * out.scale(c);
  }
  return out;
}

double sparsity(const Matrix& u, double zero_tol) {
  if (u.size() == 0) return 0.0;
  const double thresh = zero_tol * u.cwiseAbs().maxCoeff();
  const auto zeros = (u.array() <= thresh).count();
  return static_cast<double>(zeros) / static_cast<double>(u.size());
}

std::vector<DuplicatePair> detect_duplicates(const Matrix& m, double tol) {
  std::vector<DuplicatePair> out;
  const Vector norms = m.colwise().norm().transpose();
  for (Index i = 0; i < m.cols(); ++i) {
    if (norms(i) == 0.0) continue;
    for (Index j = 0; j < i; ++j) {
      if (norms(j) == 0.0) continue;
      const double alpha = std::max(0.0, m.col(i).dot(m.col(j)) / (norms(j) * norms(j)));
      const double dev = (m.col(i) - alpha * m.col(j)).norm();
      if (dev <= tol * norms(i)) out.push_back({i, j, alpha});
    }
  }
  return out;
}

Index numerical_rank(const Matrix& m, double rel_tol) {
  Eigen::JacobiSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return 0;
  Index r = 0;
  for (Index k = 0; k < s.size(); ++k) {
    if (s(k) > rel_tol * s(0)) ++r;
  }
  return r;
}

void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw Error(ErrorCode::NonFinite, what + " contains NaN or Inf");
}

double relative_error(const Matrix& m, const Matrix& u, const Matrix& v) {
  const double denom = m.norm();
  const double num = (m - u * v).norm();
  return denom > 0.0 ? num / denom : num;
}

}  // namespace prenmf
