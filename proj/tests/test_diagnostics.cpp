#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "chemo/diagnostics.hpp"
#include "dense_oracle.hpp"

using Catch::Approx;
using namespace chemo;

namespace {

DiagnosticsRecord record_of(const SimState& s, PoissonWorkspace& ws) { return record(s, dual_potential(ws, s.u, s.constants.M)); }

struct Residuals {
  double energy = 0.0;
  double duality = 0.0;
};

// Largest residuals over the first `steps` steps of a smooth 1D run.
Residuals max_residuals(double tau, int steps) {
  const Grid g = Grid::line(1.0, 64);
  const Motility gamma = Motility::exponential(1.0);
  SimState s = make_state(gamma, sample(g, [](double x, double) { return 1.0 + 0.4 * std::cos(std::numbers::pi * x); }),
                          sample(g, [](double x, double) { return 0.8 + 0.2 * std::cos(std::numbers::pi * x); }));
  StepConfig cfg;
  cfg.tau = tau;
  PoissonWorkspace ws(g);
  Residuals r;
  for (int n = 0; n < steps; ++n) {
    const SimState next = advance(s, gamma, cfg);
    r.energy = std::max(r.energy, energy_identity_residual(s.v, next.v, next.u, tau));
    r.duality = std::max(r.duality, duality_identity_residual(s.u, next.u, s.v, gamma, s.constants.M, tau, ws));
    s = next;
  }
  return r;
}

std::vector<DiagnosticsRecord> steady_history(int n, double dt) {
  std::vector<DiagnosticsRecord> h(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) h[static_cast<std::size_t>(i)].t = i * dt;
  return h;
}

}  // namespace

TEST_CASE("record", "[diagnostics]") {
  const Grid g = Grid::line(1.0, 32);
  const Motility gamma = Motility::exponential(1.0);
  PoissonWorkspace ws(g);
  SECTION("state (M, 0)") {
    const SimState s = make_state(gamma, Field(g, 1.2), Field(g, 0.0));
    const DiagnosticsRecord r = record_of(s, ws);
    CHECK(r.massMean == Approx(1.2).epsilon(1e-15));
    // M itself carries the rounding of the mean
    CHECK(r.uMinusM_L2 <= 1e-15);
    CHECK(r.gradP_L2 <= 1e-15);
    CHECK(r.liapunov <= 1e-30);
    CHECK(r.vH2 == 0.0);
  }
  SECTION("eigenmode perturbation") {
    const double eps = 0.05;
    const Field mode = sample(g, [](double x, double) { return std::cos(std::numbers::pi * x); });
    const SimState s = make_state(gamma, axpy(eps, mode, Field(g, 1.0)), Field(g, 0.0));
    const DiagnosticsRecord r = record_of(s, ws);
    const double expected = eps * std::sqrt(dot(mode, mode)) / std::sqrt(oracle::lambda1(g));
    CHECK(r.gradP_L2 == Approx(expected).epsilon(1e-10));
    CHECK(r.liapunov == Approx(expected * expected).epsilon(1e-10));
    CHECK(std::abs(gradP_poincare_check(r, s.constants)) <= 1e-10 * expected);
  }
  SECTION("random state: liapunov recomputed bit for bit") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 20; ++trial) {
      const SimState s = make_state(gamma, oracle::random_field(g, rng, 0.1, 2.0), oracle::random_field(g, rng, 0.0, 1.0));
      const Field P = dual_potential(ws, s.u, s.constants.M);
      const DiagnosticsRecord r = record(s, P);
      CHECK(r.liapunov == grad_l2(P) * grad_l2(P) + s.constants.c2 * r.vL2 * r.vL2);
      CHECK(gradP_poincare_check(r, s.constants) < 0.0);
      CHECK(r.gradPBoundSlack == gradP_poincare_check(r, s.constants));
    }
  }
}

TEST_CASE("energy identity residual", "[diagnostics]") {
  const Grid g = Grid::line(2.0, 10);
  SECTION("no density, constant signal") {
    CHECK(energy_identity_residual(Field(g, 0.7), Field(g, 0.7), Field(g, 0.0), 0.1) == 0.0);
  }
  SECTION("uniform state against the scalar closed form") {
    // tests/oracles/frozen_values.py, item 4
    const double M = 1.5, c = 0.8, tau = 0.01;
    const SimState s = make_state(Motility::constant(1.0), Field(g, M), Field(g, c));
    StepConfig cfg;
    cfg.tau = tau;
    const Field v1 = step_v(s, s.u, cfg);
    CHECK(energy_identity_residual(s.v, v1, s.u, tau) == Approx(0.027955058361014196).epsilon(1e-12));
    CHECK(dissipation_defect(s.v, v1, s.u, tau) <= 0.0);
  }
}

TEST_CASE("duality identity residual", "[diagnostics]") {
  const Grid g = Grid::rect(1.0, 1.0, 8, 8);
  PoissonWorkspace ws(g);
  SECTION("steady density") {
    const Motility gamma = Motility::exponential(1.0);
    CHECK(duality_identity_residual(Field(g, 1.0), Field(g, 1.0), Field(g, 0.5), gamma, 1.0, 0.1, ws) == 0.0);
  }
  SECTION("constant motility: the linear term vanishes") {
    // with gamma = c the residual is |d/dt ||grad P||^2 + 2c ||u-M||^2| alone
    std::mt19937_64 rng(5);
    const Motility gamma = Motility::constant(0.7);
    const SimState s = make_state(gamma, oracle::random_field(g, rng, 0.5, 1.5), Field(g, 0.3));
    StepConfig cfg;
    cfg.tau = 1e-3;
    const Field u1 = step_u(s, gamma, cfg);
    const double M = s.constants.M;
    const Field P0 = dual_potential(ws, s.u, M), P1 = dual_potential(ws, u1, M);
    const Field dev = shifted(u1, -M);
    const double direct =
        std::abs((grad_l2_squared(P1) - grad_l2_squared(P0)) / cfg.tau + 2.0 * 0.7 * dot(dev, dev));
    CHECK(duality_identity_residual(s.u, u1, s.v, gamma, M, cfg.tau, ws) == Approx(direct).epsilon(1e-9));
  }
}

TEST_CASE("identity residuals are first order in tau", "[diagnostics][convergence]") {
  const double T = 0.02;
  const Residuals a = max_residuals(1e-3, static_cast<int>(std::lround(T / 1e-3)));
  const Residuals b = max_residuals(5e-4, static_cast<int>(std::lround(T / 5e-4)));
  CHECK(a.energy / b.energy == Approx(2.0).margin(0.3));
  CHECK(a.duality / b.duality == Approx(2.0).margin(0.3));
}

TEST_CASE("dissipation inequality holds every step", "[diagnostics][property]") {
  std::mt19937_64 rng(77);
  const Grid g = Grid::rect(1.0, 1.0, 12, 12);
  const Motility gamma = Motility::rational(2.0);
  SimState s = make_state(gamma, oracle::random_field(g, rng, 0.0, 3.0), oracle::random_field(g, rng, 0.0, 1.0));
  StepConfig cfg;
  cfg.tau = 1e-2;
  for (int n = 0; n < 50; ++n) {
    const SimState next = advance(s, gamma, cfg);
    CHECK(dissipation_defect(s.v, next.v, next.u, cfg.tau) <= 1e-10 * dot(s.v, s.v));
    s = next;
  }
}

TEST_CASE("differential inequality slacks", "[diagnostics]") {
  DerivedConstants k;
  k.M = 1.0;
  k.V = 2.0;
  k.c1 = 0.3;
  k.c2 = 0.5;
  k.gammaStar = 0.4;
  SECTION("steady records") {
    DiagnosticsRecord a, b;
    b.t = 0.1;
    CHECK(prop6_slack(a, b, k) == 0.0);
    CHECK(lemma7_slack(a, b, k) == 0.0);
  }
  SECTION("zero signal leaves -V^2 ||u-M||^2") {
    DiagnosticsRecord a, b;
    b.t = 0.1;
    b.uMinusM_L2 = 0.3;
    CHECK(lemma7_slack(a, b, k) == Approx(-4.0 * 0.09).epsilon(1e-15));
  }
  SECTION("uniform density with a heat-decaying eigenmode") {
    const Grid g = Grid::line(1.0, 32);
    const Motility gamma = Motility::constant(1.0);
    const Field mode = sample(g, [](double x, double) { return std::cos(std::numbers::pi * x); });
    SimState s = make_state(gamma, Field(g, 1.0), axpy(0.2, mode, Field(g, 0.5)));
    PoissonWorkspace ws(g);
    StepConfig cfg;
    cfg.tau = 1e-3;
    DiagnosticsRecord prev = record_of(s, ws);
    for (int n = 0; n < 20; ++n) {
      s = advance(s, gamma, cfg);
      const DiagnosticsRecord cur = record_of(s, ws);
      CHECK(lemma7_slack(prev, cur, s.constants) <= 0.0);
      CHECK(prop6_slack(prev, cur, s.constants) == Approx(0.0).margin(1e-12));
      prev = cur;
    }
  }
  SECTION("records out of order") {
    DiagnosticsRecord a;
    CHECK_THROWS_AS(prop6_slack(a, a, k), DomainError);
  }
}

TEST_CASE("gronwall bounds", "[diagnostics]") {
  DerivedConstants k;
  k.M = 1.5;
  k.V = 1.0;
  k.c1 = 0.3;
  SECTION("initial record is an equality") {
    std::vector<DiagnosticsRecord> h(1);
    h[0].vGradL2 = 0.7;
    h[0].vL1 = 2.0;
    h[0].uMinusM_L2 = 0.4;
    const GronwallSlacks gs = gronwall_bounds(h, k);
    CHECK(gs.g1[0] == 0.0);
    CHECK(gs.g3[0] == 0.0);
  }
  SECTION("uniform density: heat decay of an eigenmode stays under e^{-2Mt}") {
    const Grid g = Grid::line(1.0, 32);
    const Motility gamma = Motility::exponential(1.0);
    const Field mode = sample(g, [](double x, double) { return std::cos(std::numbers::pi * x); });
    SimState s = make_state(gamma, Field(g, k.M), axpy(0.2, mode, Field(g, 0.5)));
    PoissonWorkspace ws(g);
    StepConfig cfg;
    cfg.tau = 1e-3;
    std::vector<DiagnosticsRecord> h{record_of(s, ws)};
    for (int n = 0; n < 500; ++n) {
      s = advance(s, gamma, cfg);
      if ((n + 1) % 10 == 0) h.push_back(record_of(s, ws));
    }
    const GronwallSlacks gs = gronwall_bounds(h, s.constants);
    for (double x : gs.g1) CHECK(x <= 0.0);
    double worst3 = 0.0;
    for (double x : gs.g3) worst3 = std::max(worst3, x);
    // backward Euler decays as (1 + tau M)^{-n}, slower than e^{-Mt} by O(tau)
    CHECK(worst3 <= 2.0 * cfg.tau * k.M * h.front().vL1);
  }
  SECTION("empty history") { CHECK_THROWS_AS(gronwall_bounds({}, k), DomainError); }
}

TEST_CASE("window integrals", "[diagnostics]") {
  SECTION("steady trajectory") {
    const auto h = steady_history(31, 0.1);
    const WindowIntegrals w = window_integrals(h, 1.0);
    CHECK(w.uDevIntegral == 0.0);
    CHECK(w.vH2Integral == 0.0);
  }
  SECTION("constant deviation d gives d^2") {
    auto h = steady_history(37, 0.1);
    for (auto& r : h) r.uMinusM_L2 = 0.3;
    CHECK(window_integrals(h, 0.55).uDevIntegral == Approx(0.09).epsilon(1e-12));
    CHECK(window_integrals(h, 2.0).uDevIntegral == Approx(0.09).epsilon(1e-12));
  }
  SECTION("linear integrand, window ends between records") {
    auto h = steady_history(41, 0.1);
    for (auto& r : h) r.vH2 = std::sqrt(r.t);  // integrand t
    CHECK(window_integrals(h, 0.25).vH2Integral == Approx(0.75).epsilon(1e-12));
  }
  SECTION("insufficient coverage") {
    const auto h = steady_history(11, 0.1);
    CHECK_THROWS_AS(window_integrals(h, 0.5), DomainError);
  }
}

TEST_CASE("linf monotonicity", "[diagnostics]") {
  auto h = steady_history(5, 0.1);
  CHECK(linf_monotonicity_check(h));
  for (std::size_t i = 0; i < h.size(); ++i) h[i].vLinf = 1.0 - 0.1 * static_cast<double>(i);
  CHECK(linf_monotonicity_check(h));
  for (std::size_t i = 0; i < h.size(); ++i) h[i].vLinf = 0.5 + 0.1 * static_cast<double>(i);
  CHECK_FALSE(linf_monotonicity_check(h));

  // along a scheme trajectory
  std::mt19937_64 rng(3);
  const Grid g = Grid::line(1.0, 40);
  const Motility gamma = Motility::exponential(2.0);
  SimState s = make_state(gamma, oracle::random_field(g, rng, 0.0, 2.0), oracle::random_field(g, rng, 0.0, 3.0));
  PoissonWorkspace ws(g);
  StepConfig cfg;
  cfg.tau = 1e-3;
  std::vector<DiagnosticsRecord> traj{record_of(s, ws)};
  for (int n = 0; n < 200; ++n) {
    s = advance(s, gamma, cfg);
    traj.push_back(record_of(s, ws));
  }
  CHECK(linf_monotonicity_check(traj));
}

TEST_CASE("csv layout", "[diagnostics][io]") {
  std::ostringstream os;
  DiagnosticsRecord r;
  r.t = 0.1;
  r.liapunov = 1.0 / 3.0;
  write_csv(os, {r});
  const std::string text = os.str();
  CHECK(text.substr(0, text.find('\n')) ==
        "t,massMean,vLinf,vL1,vL2,vGradL2,vH1,vH2,uMinusM_L2,gradP_L2,liapunov,energyIdentityResidual,"
        "dualityIdentityResidual,prop6Slack,lemma7Slack,g1Slack,g3Slack,gradPBoundSlack");
  CHECK(text.find("0.33333333333333331") != std::string::npos);
  CHECK(record_field(r, "t") == 0.1);
  CHECK_THROWS_AS(record_field(r, "nope"), DomainError);
}
