#include "prenmf/uniq.hpp"

#include "prenmf/error.hpp"
#include "prenmf/npp3.hpp"

#include <algorithm>
#include <limits>
#include <set>

namespace prenmf {
namespace {

using Support = std::vector<bool>;

Support row_support(const Matrix& m, Index i, double cut) {
  Support s(static_cast<std::size_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j) s[static_cast<std::size_t>(j)] = m(i, j) > cut;
  return s;
}

double cutoff(const Matrix& m, double zero_tol) { return zero_tol * (m.size() ? m.cwiseAbs().maxCoeff() : 0.0); }

void check_input(const Matrix& m, Index r) {
  if (m.size() == 0) throw Error(ErrorCode::InvalidArgument, "empty input matrix");
  if (r < 1) throw Error(ErrorCode::InvalidArgument, "rank must be at least 1");
  require_finite(m, "input matrix");
}

}  // namespace

std::vector<Index> vertex_columns_by_sparsity(const Matrix& m, Index r, double zero_tol) {
  check_input(m, r);
  const double cut = cutoff(m, zero_tol);
  std::vector<Support> rows;
  std::vector<bool> zero_row(static_cast<std::size_t>(m.rows()));
  for (Index i = 0; i < m.rows(); ++i) {
    rows.push_back(row_support(m, i, cut));
    zero_row[static_cast<std::size_t>(i)] = std::none_of(rows.back().begin(), rows.back().end(), [](bool b) { return b; });
  }
  std::vector<Index> out;
  for (Index j = 0; j < m.cols(); ++j) {
    if (m.col(j).maxCoeff() <= cut) continue;
    std::set<Support> distinct;
    for (Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) <= cut && !zero_row[static_cast<std::size_t>(i)]) distinct.insert(rows[static_cast<std::size_t>(i)]);
    }
    if (static_cast<Index>(distinct.size()) >= r - 1) out.push_back(j);
  }
  return out;
}

namespace {

std::vector<Index> non_proportional(const Matrix& m, const std::vector<Index>& cols) {
  std::vector<Index> keep;
  for (Index j : cols) {
    const Vector x = m.col(j) / m.col(j).lpNorm<1>();
    const bool seen = std::any_of(keep.begin(), keep.end(), [&](Index k) {
      return (m.col(k) / m.col(k).lpNorm<1>() - x).lpNorm<1>() <= kDefaultDuplicateTol;
    });
    if (!seen) keep.push_back(j);
  }
  return keep;
}

}  // namespace

bool is_unique_by_sparsity(const Matrix& m, Index r, double zero_tol) {
  if (numerical_rank(m) != r) return false;
  return static_cast<Index>(non_proportional(m, vertex_columns_by_sparsity(m, r, zero_tol)).size()) >= r;
}

std::vector<ContainmentWitness> support_containment(const Matrix& u, double zero_tol) {
  if (u.size() == 0) return {};
  require_finite(u, "factor U");
  const double cut = cutoff(u, zero_tol);
  const Index r = u.cols();
  std::vector<ContainmentWitness> out;
  for (Index k = 0; k < r; ++k) {
    if (u.col(k).maxCoeff() <= cut) continue;
    for (Index l = 0; l < r; ++l) {
      if (l == k) continue;
      bool inside = true;
      for (Index p = 0; p < u.rows() && inside; ++p) inside = !(u(p, k) > cut && u(p, l) <= cut);
      if (!inside) continue;
      ContainmentWitness w;
      w.k = k;
      w.l = l;
      double best = std::numeric_limits<double>::infinity();
      for (Index p = 0; p < u.rows(); ++p) {
        if (u(p, k) > cut && u(p, l) / u(p, k) < best) {
          best = u(p, l) / u(p, k);
          w.p_bar = p;
        }
      }
      w.epsilon = best;
      w.d = Matrix::Identity(r, r);
      w.d(k, l) = -w.epsilon;
      w.ud = u * w.d;
      w.verified = w.ud.minCoeff() >= -cut && w.ud(w.p_bar, l) <= cut && u(w.p_bar, l) > cut;
      out.push_back(std::move(w));
    }
  }
  return out;
}

UniquenessReport uniqueness_report(const Matrix& m, Index r, double zero_tol, const Matrix* u) {
  check_input(m, r);
  UniquenessReport rep;
  rep.r = r;
  rep.rank = numerical_rank(m);
  rep.vertex_columns = vertex_columns_by_sparsity(m, r, zero_tol);
  rep.chosen = non_proportional(m, rep.vertex_columns);
  rep.unique = rep.rank == r && static_cast<Index>(rep.chosen.size()) >= r;
  if (r == 3 && rep.rank == 3) rep.rank_plus_three = npp::min_vertices(npp::build_npp(m)) == 3;
  if (u) {
    rep.containment = support_containment(*u, zero_tol);
  } else if (!rep.chosen.empty()) {
    Matrix w(m.rows(), static_cast<Index>(rep.chosen.size()));
    for (std::size_t c = 0; c < rep.chosen.size(); ++c) w.col(static_cast<Index>(c)) = m.col(rep.chosen[c]);
    rep.containment = support_containment(w, zero_tol);
  }
  return rep;
}

}  // namespace prenmf
