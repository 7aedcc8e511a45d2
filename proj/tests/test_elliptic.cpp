#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "chemo/elliptic.hpp"
#include "dense_oracle.hpp"

using Catch::Approx;
using namespace chemo;

namespace {

Field zero_mean_random(const Grid& g, std::mt19937_64& rng) {
  Field z = oracle::random_field(g, rng);
  return shifted(z, -mean(z));
}

}  // namespace

TEST_CASE("poisson_solve basic cases", "[elliptic]") {
  SECTION("zero rhs") {
    const Grid g = Grid::line(1, 10);
    PoissonWorkspace ws(g);
    CHECK(max_abs(poisson_solve(ws, Field(g))) == 0.0);
  }
  SECTION("1D eigenvector: K = z / lambda1") {
    const int n = 32;
    const Grid g = Grid::line(2.0, n);
    PoissonWorkspace ws(g);
    const Field z = sample(g, [](double x, double) { return std::cos(std::numbers::pi * x / 2.0); });
    const double lambda = oracle::lambda1(g);
    const Field K = poisson_solve(ws, z);
    for (std::size_t i = 0; i < z.size(); ++i) CHECK(K[i] == Approx(z[i] / lambda).margin(1e-12));
  }
  SECTION("frozen 3x2 solution") {
    // tests/oracles/frozen_values.py, item 3
    const Grid g = Grid::rect(1.5, 1.0, 3, 2);
    PoissonWorkspace ws(g);
    const Field z(g, {1.0, -2.0, 0.5, 0.25, -1.0, 1.25});
    const Field K = poisson_solve(ws, z);
    const double expected[] = {0.0375, -0.225, 0.05, 0.0125, -0.025, 0.15};
    for (std::size_t i = 0; i < 6; ++i) CHECK(K[i] == Approx(expected[i]).margin(1e-13));
    CHECK(std::abs(mean(K)) < 1e-16);
  }
  SECTION("nonzero mean is rejected") {
    const Grid g = Grid::line(1, 8);
    PoissonWorkspace ws(g);
    CHECK_THROWS_AS(poisson_solve(ws, Field(g, 1.0)), IncompatibilityError);
  }
  SECTION("iteration budget exhausted") {
    const Grid g = Grid::rect(1, 1, 16, 16);
    std::mt19937_64 rng(1);
    PoissonWorkspace ws(g, 1e-12, 2);
    try {
      poisson_solve(ws, zero_mean_random(g, rng));
      FAIL("expected NoConvergence");
    } catch (const NoConvergence& e) {
      CHECK(e.iterations() == 2);
      CHECK(e.residual() > 1e-12);
    }
  }
  SECTION("workspace validation") {
    CHECK_THROWS_AS(PoissonWorkspace(Grid::line(1, 4), 0.0), DomainError);
    CHECK_THROWS_AS(PoissonWorkspace(Grid::line(1, 4), 1e-12, 0), DomainError);
  }
}

TEST_CASE("poisson_solve matches dense bordered solve", "[elliptic][oracle]") {
  std::mt19937_64 rng(2024);
  const Grid grids[] = {Grid::line(1.0, 2), Grid::line(1.0, 37), Grid::rect(1.0, 1.0, 6, 6),
                        Grid::rect(2.0, 0.5, 12, 5), Grid::rect(1.0, 1.0, 1, 9)};
  for (const Grid& g : grids) {
    PoissonWorkspace ws(g);
    for (int trial = 0; trial < 5; ++trial) {
      const Field z = zero_mean_random(g, rng);
      const Field K = poisson_solve(ws, z);
      const oracle::Vec ref = oracle::poisson(g, oracle::to_vec(z));
      CHECK((oracle::to_vec(K) - ref).lpNorm<Eigen::Infinity>() <= 1e-10);
      CHECK(std::abs(mean(K)) <= 1e-15);
      CHECK(ws.last_residual <= 1e-11);
    }
  }
}

TEST_CASE("poincare_constant", "[elliptic]") {
  SECTION("two cells") {
    // dense eigensolve in tests/oracles/frozen_values.py, item 2: lambda1 = 8
    CHECK(poincare_constant(Grid::line(1.0, 2)) == Approx(1.0 / std::sqrt(8.0)).epsilon(1e-15));
  }
  SECTION("continuum limit L / pi") {
    const double L = 3.0;
    CHECK(poincare_constant(Grid::line(L, 4096)) == Approx(L / std::numbers::pi).epsilon(1e-6));
  }
  SECTION("longer axis decides on rectangles") {
    const Grid g = Grid::rect(2.0, 1.0, 200, 100);
    CHECK(poincare_constant(g) == Approx(poincare_constant(Grid::line(2.0, 200))).epsilon(1e-15));
    CHECK(poincare_constant(g) == Approx(2.0 / std::numbers::pi).epsilon(1e-4));
  }
  SECTION("dense eigensolve") {
    for (const Grid& g : {Grid::line(1.0, 9), Grid::rect(1.0, 1.3, 5, 7), Grid::rect(0.5, 2.0, 8, 3)}) {
      CHECK(1.0 / std::sqrt(oracle::lambda1(g)) == Approx(poincare_constant(g)).epsilon(1e-10));
    }
  }
  SECTION("single cell has none") { CHECK_THROWS_AS(poincare_constant(Grid::line(1.0, 1)), DomainError); }
}

TEST_CASE("discrete Poincare-Wirtinger and gradP bound hold exactly", "[elliptic][property]") {
  std::mt19937_64 rng(99);
  for (const Grid& g : {Grid::line(1.0, 16), Grid::rect(1.0, 2.0, 8, 6)}) {
    const double c1 = poincare_constant(g);
    PoissonWorkspace ws(g);
    for (int trial = 0; trial < 200; ++trial) {
      const Field z = zero_mean_random(g, rng);
      CHECK(std::sqrt(dot(z, z)) <= c1 * grad_l2(z) + 1e-10);

      const Field u = shifted(oracle::random_field(g, rng, 0.0, 2.0), 0.0);
      const double M = mean(u);
      const Field P = dual_potential(ws, u, M);
      const Field dev = shifted(u, -M);
      const double dev_l2 = std::sqrt(dot(dev, dev));
      CHECK(grad_l2(P) <= c1 * dev_l2 + 1e-10);
      // duality: ||grad P||^2 = <u - M, P>
      CHECK(grad_l2_squared(P) == Approx(dot(dev, P)).epsilon(1e-11));
    }
  }
}

TEST_CASE("dual_potential", "[elliptic]") {
  const Grid g = Grid::line(1.0, 24);
  PoissonWorkspace ws(g);
  SECTION("uniform density") { CHECK(max_abs(dual_potential(ws, Field(g, 2.0), 2.0)) == 0.0); }
  SECTION("eigenmode perturbation") {
    const double M = 1.5, eps = 0.1;
    const Field mode = sample(g, [](double x, double) { return std::cos(std::numbers::pi * x); });
    const Field u = axpy(eps, mode, Field(g, M));
    const Field P = dual_potential(ws, u, M);
    const double lambda = oracle::lambda1(g);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(P[i] == Approx(eps * mode[i] / lambda).margin(1e-13));
    // lowest mode attains the bound with equality
    const Field dev = shifted(u, -M);
    CHECK(grad_l2(P) == Approx(poincare_constant(g) * std::sqrt(dot(dev, dev))).epsilon(1e-10));
  }
  SECTION("mass mismatch") { CHECK_THROWS_AS(dual_potential(ws, Field(g, 2.0), 1.0), IncompatibilityError); }
  SECTION("nearly uniform density keeps working") {
    const Field mode = sample(g, [](double x, double) { return std::cos(2 * std::numbers::pi * x); });
    const Field u = axpy(1e-13, mode, Field(g, 1.0));
    CHECK_NOTHROW(dual_potential(ws, u, 1.0));
  }
}

TEST_CASE("derived constants", "[elliptic]") {
  const Grid g = Grid::line(1.0, 16);
  const Field u(g, 2.0), v(g, 0.5);
  const Motility gamma = Motility::exponential(1.0);
  const DerivedConstants k = derive_constants(gamma, u, v);
  CHECK(k.M == Approx(2.0));
  CHECK(k.V == 0.5);
  CHECK(k.gammaStar == Approx(std::exp(-0.5)).epsilon(1e-12));
  CHECK(k.gammaPrimeSup == Approx(1.0).epsilon(1e-12));
  CHECK(k.c2 == Approx(std::pow(k.M * k.c1 * k.gammaPrimeSup, 2) / k.gammaStar).epsilon(1e-15));
  CHECK(k.c4 == Approx(2.0 * k.gammaStar / (k.c1 * k.c1)).epsilon(1e-15));
  CHECK(k.c5 == Approx(2.0 * k.M * k.c1 * k.gammaPrimeSup).epsilon(1e-15));
  CHECK(k.within_assumptions);

  CHECK_THROWS_AS(derive_constants(gamma, Field(g), v), AssumptionViolation);
  Motility loose = Motility::constant(0.0);
  loose.set_require_positive(false);
  const DerivedConstants kf = derive_constants(loose, u, v);
  CHECK_FALSE(kf.within_assumptions);
  CHECK(kf.c2 == 0.0);
}
