#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace prenmf {

// Column-major dense carrier used for M, U, V, B and the preprocessed data.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kDefaultDropTol = 1e-12;
inline constexpr double kDefaultZeroTol = 1e-8;
inline constexpr double kDefaultDuplicateTol = 1e-8;
inline constexpr double kDefaultRankTol = 1e-9;

/// Column-stochastic normalization of the non-zero columns of a matrix.
/// theta.col(j) == source.col(kept[j]) * scale[j].
struct Pullback {
  Matrix theta;
  Vector scale;              // inverse l1 norm of each kept column
  std::vector<Index> kept;   // source column indices, original order
};

/// Normalizes every column to unit l1 norm. A column is dropped when its l1
/// norm is at most drop_tol times the largest column l1 norm.
/// Throws Error(AllColumnsZero) when nothing survives.
Pullback pullback(const Matrix& x, double drop_tol = kDefaultDropTol);

/// Fraction of entries that are <= zero_tol * max|U|. Negative entries count
/// as zeros.
double sparsity(const Matrix& u, double zero_tol = kDefaultZeroTol);

struct DuplicatePair {
  Index i;       // the column that is (approximately) a multiple ...
  Index j;       // ... of this one, with i > j
  double ratio;  // least-squares alpha >= 0 with M_:i ~ alpha * M_:j
};

/// Pairs of columns that are nonnegative multiples of each other within
/// ||M_:i - alpha M_:j|| <= tol * ||M_:i||. Zero columns are ignored.
std::vector<DuplicatePair> detect_duplicates(const Matrix& m, double tol = kDefaultDuplicateTol);

/// Number of singular values above rel_tol * sigma_max.
Index numerical_rank(const Matrix& m, double rel_tol = kDefaultRankTol);

/// Throws Error(NonFinite) if any entry is NaN or infinite.
void require_finite(const Matrix& m, const std::string& what);

double relative_error(const Matrix& m, const Matrix& u, const Matrix& v);

}  // namespace prenmf
