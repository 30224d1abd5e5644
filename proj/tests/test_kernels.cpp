#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>

#include "aggfrag/kernels.hpp"
#include "aggfrag/rng.hpp"

using namespace aggfrag;

TEST_CASE("constant, sum, product values") {
  CHECK(evaluate(KernelSpec::constant(1.0), 3, 9) == 1.0);
  CHECK(evaluate(KernelSpec::constant(2.5), 1, 1) == 2.5);
  CHECK(evaluate(KernelSpec::sum(1.0), 3, 9) == 12.0);
  CHECK(evaluate(KernelSpec::product(1.0), 3, 9) == 27.0);
  CHECK(evaluate(KernelSpec::product(0.5), 4, 4) == 8.0);
}

TEST_CASE("ballistic frozen values") {
  // (i^(1/3)+j^(1/3))^2 sqrt(1/i+1/j), evaluated independently
  const auto k = KernelSpec::ballistic(1.0);
  CHECK(evaluate(k, 1, 1) == Catch::Approx(5.65685424949238).epsilon(1e-12));
  CHECK(evaluate(k, 1, 8) == Catch::Approx(9.54594154601839).epsilon(1e-12));
  CHECK(evaluate(k, 27, 8) == Catch::Approx(10.0634560737427).epsilon(1e-12));
  CHECK(evaluate(k, 64, 64) == Catch::Approx(11.3137084989848).epsilon(1e-12));
  CHECK(evaluate(KernelSpec::ballistic(3.0), 1, 1) ==
        Catch::Approx(3.0 * 5.65685424949238).epsilon(1e-12));
}

TEST_CASE("generalized frozen values") {
  CHECK(evaluate(KernelSpec::generalized(0.95), 2, 8) ==
        Catch::Approx(4.0000753317813).epsilon(1e-12));
  CHECK(evaluate(KernelSpec::generalized(0.5), 5, 5) == Catch::Approx(2.0).epsilon(1e-12));
  CHECK(evaluate(KernelSpec::generalized(0.9), 1, 1000) ==
        Catch::Approx(501.189228889587).epsilon(1e-12));
  // a = 0 degenerates to the constant kernel value 2*amp
  CHECK(evaluate(KernelSpec::generalized(0.0, 1.0), 7, 19) == Catch::Approx(2.0));
}

TEST_CASE("symmetry is bitwise") {
  Rng rng(11);
  for (const auto& spec :
       {KernelSpec::constant(1.3), KernelSpec::sum(0.7), KernelSpec::product(2.0),
        KernelSpec::ballistic(1.0), KernelSpec::generalized(0.95, 1.0),
        KernelSpec::generalized(0.5, 0.25)}) {
    for (int it = 0; it < 2000; ++it) {
      const std::uint64_t i = 1 + rng.uniform_below(5000);
      const std::uint64_t j = 1 + rng.uniform_below(5000);
      REQUIRE(evaluate(spec, i, j) == evaluate(spec, j, i));
      REQUIRE(evaluate(spec, i, j) > 0.0);
    }
  }
}

TEST_CASE("separable factor identity") {
  // K(x,y) = u(x) v(y) + v(x) u(y) for every family that claims separability
  Rng rng(17);
  for (const auto& spec :
       {KernelSpec::constant(1.0), KernelSpec::constant(3.5), KernelSpec::sum(1.0),
        KernelSpec::sum(0.2), KernelSpec::product(1.0), KernelSpec::product(4.0),
        KernelSpec::generalized(0.95, 1.0), KernelSpec::generalized(0.9, 2.0)}) {
    REQUIRE(is_separable(spec.family));
    for (int it = 0; it < 1000; ++it) {
      const double x = 1.0 + static_cast<double>(rng.uniform_below(3000));
      const double y = 1.0 + static_cast<double>(rng.uniform_below(3000));
      const double direct = kernel_value(spec, x, y);
      const double folded = kernel_factor_u(spec, x) * kernel_factor_v(spec, y) +
                            kernel_factor_v(spec, x) * kernel_factor_u(spec, y);
      REQUIRE(folded == Catch::Approx(direct).epsilon(1e-12));
    }
  }
  CHECK(!is_separable(KernelFamily::Ballistic));
}

TEST_CASE("majorant dominates all pairs up to the max size") {
  Rng rng(23);
  for (const auto& spec :
       {KernelSpec::constant(1.0), KernelSpec::sum(1.0), KernelSpec::product(1.0),
        KernelSpec::ballistic(1.0), KernelSpec::ballistic(0.5),
        KernelSpec::generalized(0.95, 1.0), KernelSpec::generalized(0.7, 2.0)}) {
    for (const std::uint64_t m : {1ull, 2ull, 3ull, 10ull, 117ull, 512ull, 100000ull}) {
      const double cap = majorant(spec, m);
      for (int it = 0; it < 500; ++it) {
        const std::uint64_t i = 1 + rng.uniform_below(m);
        const std::uint64_t j = 1 + rng.uniform_below(m);
        REQUIRE(evaluate(spec, i, j) <= cap * (1.0 + 1e-12));
      }
      // corners are the usual suspects
      REQUIRE(evaluate(spec, 1, m) <= cap * (1.0 + 1e-12));
      REQUIRE(evaluate(spec, m, m) <= cap * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("ballistic majorant: diagonal beats the corner at M=2") {
  // K(2,2) = 6.3496 > K(1,2) = 6.2551, so a corner-only majorant would be
  // invalid; the implementation must take the max over both candidates.
  const auto k = KernelSpec::ballistic(1.0);
  CHECK(evaluate(k, 2, 2) == Catch::Approx(6.3496042078728).epsilon(1e-12));
  CHECK(evaluate(k, 1, 2) == Catch::Approx(6.25506985706536).epsilon(1e-12));
  CHECK(majorant(k, 2) >= 6.3496042078728 * (1.0 - 1e-12));
  // at large M the corner (1, M) dominates the diagonal
  CHECK(majorant(k, 512) == Catch::Approx(81.0790629763628).epsilon(1e-12));
}

TEST_CASE("generalized majorant closed form") {
  const auto k = KernelSpec::generalized(0.95, 1.0);
  const double m = 1000.0;
  CHECK(majorant(k, 1000) ==
        Catch::Approx(std::pow(m, 0.95) + std::pow(m, -0.95)).epsilon(1e-12));
  // negative exponents mirror positive ones
  CHECK(majorant(KernelSpec::generalized(-0.95, 1.0), 1000) ==
        Catch::Approx(majorant(k, 1000)).epsilon(1e-12));
  CHECK(majorant(KernelSpec::generalized(0.3, 2.0), 1) == Catch::Approx(4.0));
}

TEST_CASE("zero size is rejected") {
  CHECK_THROWS(evaluate(KernelSpec::constant(1.0), 0, 3));
  CHECK_THROWS(evaluate(KernelSpec::ballistic(1.0), 2, 0));
}
