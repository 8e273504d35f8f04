#include "prenmf/cllsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace prenmf {

Vector nnls_lawson_hanson(const Matrix& a, const Vector& b, int max_iter) {
  const Index n = a.cols();
  Vector x = Vector::Zero(n);
  if (n == 0 || b.norm() == 0.0) return x;
  if (max_iter <= 0) max_iter = static_cast<int>(3 * n + 30);

  const double tol = 1e-13 * std::max(1.0, a.norm()) * b.norm();
  std::vector<char> passive(static_cast<std::size_t>(n), 0);
  Vector w = a.transpose() * (b - a * x);

  for (int outer = 0; outer < max_iter; ++outer) {
    Index t = -1;
    double best = tol;
    for (Index k = 0; k < n; ++k) {
      if (!passive[static_cast<std::size_t>(k)] && w(k) > best) {
        best = w(k);
        t = k;
      }
    }
    if (t < 0) break;
    passive[static_cast<std::size_t>(t)] = 1;

    for (int inner = 0; inner <= n; ++inner) {
      std::vector<Index> pset;
      for (Index k = 0; k < n; ++k) {
        if (passive[static_cast<std::size_t>(k)]) pset.push_back(k);
      }
      if (pset.empty()) break;
      Matrix ap(a.rows(), static_cast<Index>(pset.size()));
      for (std::size_t k = 0; k < pset.size(); ++k) ap.col(static_cast<Index>(k)) = a.col(pset[k]);
      const Vector sp = ap.colPivHouseholderQr().solve(b);

      Vector s = Vector::Zero(n);
      for (std::size_t k = 0; k < pset.size(); ++k) s(pset[k]) = sp(static_cast<Index>(k));

      bool all_positive = true;
      for (Index k : pset) all_positive = all_positive && s(k) > 0.0;
      if (all_positive) {
        x = s;
        break;
      }
      double alpha = 1.0;
      for (Index k : pset) {
        if (s(k) <= 0.0) {
          const double denom = x(k) - s(k);
          if (denom > 0.0) alpha = std::min(alpha, x(k) / denom);
        }
      }
      x += alpha * (s - x);
      for (Index k : pset) {
        if (x(k) <= 1e-15 * std::max(1.0, x.cwiseAbs().maxCoeff())) {
          passive[static_cast<std::size_t>(k)] = 0;
          x(k) = 0.0;
        }
      }
    }
    w = a.transpose() * (b - a * x);
  }
  return x.cwiseMax(0.0);
}

}  // namespace prenmf
