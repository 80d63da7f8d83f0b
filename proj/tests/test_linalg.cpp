#include <doctest.h>

#include <cmath>

#include "gwm/error.hpp"
#include "gwm/linalg.hpp"
#include "gwm/prng.hpp"

using namespace gwm;

TEST_CASE("solve_spd solves a known system") {
  SquareMatrix a(2);
  a.at(0, 0) = 4.0;
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 3.0;
  std::vector<double> rhs = {1.0, 2.0};  // one column
  REQUIRE(solve_spd(a, rhs, 1));
  // inverse of [[4,1],[1,3]] is [[3,-1],[-1,4]]/11
  CHECK(rhs[0] == doctest::Approx((3.0 * 1 - 1.0 * 2) / 11.0));
  CHECK(rhs[1] == doctest::Approx((-1.0 * 1 + 4.0 * 2) / 11.0));
}

TEST_CASE("solve_spd flags singular systems") {
  SquareMatrix a(2);
  a.at(0, 0) = 1.0;
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 1.0;
  std::vector<double> rhs = {1.0, 1.0};
  CHECK_FALSE(solve_spd(a, rhs, 1));
}

TEST_CASE("jacobi_eigen reproduces a hand-solved 2x2") {
  SquareMatrix a(2);
  a.at(0, 0) = 2.0;
  a.at(0, 1) = 1.0;
  a.at(1, 0) = 1.0;
  a.at(1, 1) = 2.0;
  const auto eig = jacobi_eigen(a);
  CHECK(eig.values[0] == doctest::Approx(1.0));
  CHECK(eig.values[1] == doctest::Approx(3.0));
  // eigenvector for 1 is (1,-1)/sqrt(2) up to sign
  CHECK(std::fabs(eig.vectors.at(0, 0)) == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(eig.vectors.at(0, 0) * eig.vectors.at(1, 0) < 0.0);
}

TEST_CASE("jacobi_eigen satisfies A v = lambda v on random symmetric matrices") {
  Prng rng(99);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(7));
    SquareMatrix a(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        const double v = rng.uniform(-1.0, 1.0);
        a.at(i, j) = v;
        a.at(j, i) = v;
      }
    const auto eig = jacobi_eigen(a);
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        double av = 0.0;
        for (int c = 0; c < n; ++c) av += a.at(i, c) * eig.vectors.at(c, j);
        CHECK(av == doctest::Approx(eig.values[j] * eig.vectors.at(i, j)).epsilon(1e-9));
      }
    }
    for (int j = 1; j < n; ++j) CHECK(eig.values[j - 1] <= eig.values[j]);
  }
}

TEST_CASE("jacobi_eigen is deterministic") {
  Prng rng(7);
  SquareMatrix a(5);
  for (int i = 0; i < 5; ++i)
    for (int j = i; j < 5; ++j) {
      const double v = rng.uniform(-1.0, 1.0);
      a.at(i, j) = v;
      a.at(j, i) = v;
    }
  const auto e1 = jacobi_eigen(a);
  const auto e2 = jacobi_eigen(a);
  CHECK(e1.values == e2.values);
  CHECK(e1.vectors.a == e2.vectors.a);
}

TEST_CASE("prng streams are reproducible and split streams differ") {
  Prng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  Prng parent(42);
  Prng c0 = parent.split(0);
  Prng c1 = parent.split(1);
  CHECK(c0.next_u64() != c1.next_u64());
  // splitting is independent of the parent's position
  parent.next_u64();
  Prng c0_again = parent.split(0);
  Prng c0_ref(42);
  CHECK(c0_again.next_u64() == c0_ref.split(0).next_u64());
}
