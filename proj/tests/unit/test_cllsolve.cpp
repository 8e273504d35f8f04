#include "oracles.hpp"
#include "prenmf/cllsolve.hpp"
#include "prenmf/error.hpp"
#include "prenmf/fixtures.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>

using namespace prenmf;

namespace {

Matrix grid_matrix(Index m, Index n, std::mt19937_64& rng, int levels) {
  std::uniform_int_distribution<int> u(0, levels);
  Matrix out(m, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < m; ++i) out(i, j) = u(rng);
  }
  return out;
}

}  // namespace

TEST_CASE("identity column needs no correction") {
  const Matrix m = Matrix::Identity(3, 3);
  const auto s = solve_column({&m, 0, 0.0});
  CHECK(s.b.isZero());
  CHECK(s.objective == doctest::Approx(1.0));
  CHECK(s.kkt_residual <= 1e-8);
}

TEST_CASE("nested squares column 0") {
  const Matrix m = oracle::nested_squares();
  const auto s = solve_column({&m, 0, 0.0});
  Vector expect(4);
  expect << 0, 0.375, 0, 0.375;
  CHECK((s.b - expect).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((m * s.b - Vector::Constant(4, 3.0)).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(s.objective == doctest::Approx(8.0));
  CHECK(s.kkt_residual <= 1e-8);

  // Brute force over working sets agrees.
  const CllsProblem p{&m, 0, 0.0};
  const auto ref = oracle::enumerate_qp(p.reduced(), p.target(), p.upper_bound());
  REQUIRE(ref.found);
  CHECK(ref.objective == doctest::Approx(8.0));
  CHECK(ref.x(0) == doctest::Approx(0.375));
  CHECK(ref.x(1) == doctest::Approx(0.0));
  CHECK(ref.x(2) == doctest::Approx(0.375));
}

TEST_CASE("relaxed problem on the noisy fixture") {
  const Matrix m = load_fixture("noisy");
  const auto s0 = solve_column({&m, 0, 0.01});
  const auto s1 = solve_column({&m, 1, 0.01});
  // Column 0: unconstrained optimum 1/(1 + delta^2) is feasible.
  CHECK(s0.b(1) == doctest::Approx(1.0 / (1.0 + 1e-4)).epsilon(1e-12));
  // Column 1: the relaxed bound in row 1 is tight.
  CHECK(s1.b(0) == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(std::find(s1.active_set.begin(), s1.active_set.end(), 2 + 1) != s1.active_set.end());
  const Matrix p = m - m * preprocess_matrix(m, 0.01);
  Matrix expect(3, 2);
  expect << -0.01, 0.01, 1, -0.01, 1e-4, 0.99;
  CHECK((p - expect).cwiseAbs().maxCoeff() <= 5e-3);
  CHECK(preprocess_matrix(m, 0.0).isZero());
}

TEST_CASE("B* for small fixtures") {
  CHECK(preprocess_matrix(Matrix::Identity(3, 3), 0.0).isZero());
  CHECK(preprocess_matrix(load_fixture("ones-minus-identity"), 0.0).isZero());
  const Matrix b = preprocess_matrix(oracle::nested_squares(), 0.0);
  CHECK((b - 0.375 * oracle::square_adjacency()).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("kkt_check certifies optima and rejects b = 0 on the squares") {
  const Matrix m = oracle::nested_squares();
  const CllsProblem p{&m, 0, 0.0};
  CHECK(kkt_check(p, Vector::Zero(4)) > 0.1);
  Vector opt(4);
  opt << 0, 0.375, 0, 0.375;
  CHECK(kkt_check(p, opt) <= 1e-8);
  const Matrix id = Matrix::Identity(3, 3);
  CHECK(kkt_check({&id, 0, 0.0}, Vector::Zero(3)) <= 1e-8);
  Vector bad = opt;
  bad(1) = 2.0;
  CHECK_THROWS_AS(kkt_check(p, bad), Error);
}

TEST_CASE("argument validation") {
  const Matrix m = oracle::nested_squares();
  CHECK_THROWS_AS(solve_column({&m, 0, 1.0}), Error);
  CHECK_THROWS_AS(solve_column({&m, 0, -0.1}), Error);
  CHECK_THROWS_AS(solve_column({&m, 7, 0.0}), Error);
  Matrix neg = m;
  neg(0, 0) = -0.1;
  CHECK_THROWS_AS(preprocess_matrix(neg, 0.0), Error);
  CHECK_NOTHROW(preprocess_matrix(neg, 0.05));
  neg(0, 0) = -1.0;
  CHECK_THROWS_AS(preprocess_matrix(neg, 0.05), Error);
  const Matrix one_col = Matrix::Ones(3, 1);
  CHECK_THROWS_AS(preprocess_matrix(one_col, 0.0), Error);
}

TEST_CASE("zero target column returns b = 0") {
  Matrix m = oracle::nested_squares();
  m.col(2).setZero();
  const auto s = solve_column({&m, 2, 0.0});
  CHECK(s.b.isZero());
}

TEST_CASE("active set matches enumeration and grid search on coarse random matrices") {
  std::mt19937_64 rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 80; ++trial) {
    const Matrix m = grid_matrix(4, 4, rng, 4);
    if (m.colwise().norm().minCoeff() == 0.0) continue;
    for (Index i = 0; i < 4; ++i) {
      const CllsProblem p{&m, i, 0.0};
      const auto s = solve_column(p);
      const Matrix c = p.reduced();
      const double grid = oracle::grid_qp(c, p.target(), p.upper_bound(), 0.125, 2.0);
      CHECK(s.objective <= grid + 1e-9);
      if (numerical_rank(c) == 3) {
        const auto ref = oracle::enumerate_qp(c, p.target(), p.upper_bound());
        REQUIRE(ref.found);
        CHECK(std::abs(s.objective - ref.objective) <= 1e-9 * std::max(1.0, ref.objective));
        ++compared;
      }
    }
  }
  CHECK(compared >= 50);
}

TEST_CASE("fitted vector does not depend on the working-set order") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    // Wide matrices make b non-unique.
    const Matrix m = oracle::random_nonneg(4, 7, rng);
    std::vector<Index> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    ClsOptions alt;
    alt.priority = perm;
    alt.start_with_bounds = trial % 2 == 0;
    const double eps = trial % 3 == 0 ? 0.05 : 0.0;
    for (Index i = 0; i < 7; ++i) {
      const auto a = solve_column({&m, i, eps});
      const auto b = solve_column({&m, i, eps}, alt);
      CHECK((m * a.b - m * b.b).norm() <= 1e-8 * m.col(i).norm());
    }
  }
}

TEST_CASE("objective is monotone in epsilon and epsilon = 0 stays nonnegative") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix m = oracle::random_nonneg(6, 5, rng);
    const Index i = trial % 5;
    double prev = std::numeric_limits<double>::infinity();
    for (double eps : {0.0, 0.01, 0.05, 0.2, 0.5}) {
      const double obj = solve_column({&m, i, eps}).objective;
      CHECK(obj <= prev + 1e-12);
      prev = obj;
    }
    const Matrix p = m - m * preprocess_matrix(m, 0.0);
    CHECK(p.minCoeff() >= -1e-9 * m.maxCoeff());
  }
}

TEST_CASE("serial and OpenMP sweeps agree bit for bit") {
  std::mt19937_64 rng(5);
  const Matrix m = oracle::random_nonneg(15, 12, rng);
  const auto par = solve_all_columns(m, 0.02);
  const auto ser = solve_all_columns_serial(m, 0.02);
  CHECK(par.b_star == ser.b_star);
  CHECK(par.kkt == ser.kkt);
  CHECK(par.b_star.diagonal().isZero());
  CHECK(par.b_star.minCoeff() >= 0.0);
  CHECK(par.kkt.maxCoeff() <= 1e-8);
}

TEST_CASE("Lawson-Hanson NNLS agrees with enumeration") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix a = oracle::random_nonneg(6, 4, rng, -1.0, 1.0);
    const Vector b = oracle::random_nonneg(6, 1, rng, -1.0, 1.0);
    const Vector x = nnls_lawson_hanson(a, b);
    const Vector big = Vector::Constant(6, 1e12);
    const auto ref = oracle::enumerate_qp(a, b, big);
    REQUIRE(ref.found);
    CHECK((a * x - b).squaredNorm() == doctest::Approx(ref.objective).epsilon(1e-9));
    CHECK(x.minCoeff() >= 0.0);
  }
}

TEST_CASE("unconstrained-above kernel solves NNLS") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 30; ++trial) {
    const Matrix a = oracle::random_nonneg(8, 5, rng, -1.0, 1.0);
    const Vector b = oracle::random_nonneg(8, 1, rng, -1.0, 1.0);
    const auto r = solve_bounded_lsq(a, b, nullptr);
    const Vector x = nnls_lawson_hanson(a, b);
    CHECK((a * r.x - b).squaredNorm() == doctest::Approx((a * x - b).squaredNorm()).epsilon(1e-10));
  }
}

TEST_CASE("wide near-low-rank inputs pass the certificate") {
  // More columns than rows, rank 5 plus small noise: many multipliers sit
  // close to zero at the optimum.
  for (std::uint64_t seed : {1, 2}) {
    std::mt19937_64 rng(seed);
    const Matrix m = oracle::random_nonneg(40, 5, rng) * oracle::random_nonneg(5, 80, rng) +
                     1e-3 * oracle::random_nonneg(40, 80, rng);
    const auto sweep = solve_all_columns(m, 0.0);
    CHECK(sweep.kkt.maxCoeff() <= kDefaultKktTol);
  }
}
