#pragma once

// Property checks on a scenario's grid, motility and initial data, without
// a full run: structural identities of the discrete operators, the exact
// discrete inequalities, and a short stretch of steps.

#include <random>
#include <string>
#include <vector>

#include "chemo/diagnostics.hpp"
#include "chemo/elliptic.hpp"
#include "chemo/scenario.hpp"
#include "chemo/stepper.hpp"

namespace chemo {

struct PropertyCheck {
  PropertyCheck() = default;
  explicit PropertyCheck(std::string n) : name(std::move(n)) {}

  std::string name;
  bool passed = true;
  double worst = 0.0;  // worst observed value of the checked quantity
  std::string detail;
};

inline Field random_field(const Grid& g, std::mt19937_64& rng) {
  Field z(g);
  for (double& x : z.data()) x = detail::symmetric_unit(rng);
  return z;
}

inline std::vector<PropertyCheck> verify_scenario(const ScenarioConfig& cfg, int samples = 100, int steps = 50) {
  validate(cfg);
  const Grid g = cfg.grid();
  const Motility gamma = cfg.motility();
  std::mt19937_64 rng(cfg.u_init.seed);
  std::vector<PropertyCheck> out;
  const double h2 = std::pow(std::min(g.spacing(0), g.dim == 2 ? g.spacing(1) : g.spacing(0)), 2);
  const double c1 = poincare_constant(g);
  PoissonWorkspace ws(g, cfg.tolerance, cfg.max_iterations);

  PropertyCheck cons{"laplacian conservativity"}, sym{"laplacian symmetry"}, form{"laplacian form nonpositive"},
      pw{"poincare-wirtinger"}, bound{"gradP <= c1 ||u-M||"}, dual{"duality grad P^2 = <u-M, P>"};
  for (int s = 0; s < samples; ++s) {
    const Field y = random_field(g, rng);
    const Field z = random_field(g, rng);
    const Field lz = laplacian_apply(z);
    double sum = 0.0, l1 = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      sum += lz[i];
      l1 += std::abs(z[i]);
    }
    const double c = std::abs(sum) / (1e-12 * l1 / h2);
    cons.worst = std::max(cons.worst, c);
    const double a = dot(y, lz), b = dot(laplacian_apply(y), z);
    const double srel = std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
    sym.worst = std::max(sym.worst, srel);
    form.worst = std::max(form.worst, dot(z, lz));

    const Field zc = shifted(z, -mean(z));
    pw.worst = std::max(pw.worst, std::sqrt(dot(zc, zc)) - c1 * grad_l2(zc));

    const Field u = shifted(z, 2.0);  // positive density with mean near 2
    const double M = mean(u);
    const Field P = dual_potential(ws, u, M);
    const Field dev = shifted(u, -M);
    bound.worst = std::max(bound.worst, grad_l2(P) - c1 * std::sqrt(dot(dev, dev)));
    const double gp2 = grad_l2_squared(P), pair = dot(dev, P);
    dual.worst = std::max(dual.worst, std::abs(gp2 - pair) / std::max(pair, 1e-300));
  }
  cons.passed = cons.worst <= 1.0;
  cons.detail = "|sum Lap z| / (1e-12 sum|z| / h^2)";
  sym.passed = sym.worst <= 1e-12;
  form.passed = form.worst <= 0.0;
  pw.passed = pw.worst <= 1e-10;
  bound.passed = bound.worst <= 10.0 * cfg.tolerance;
  dual.passed = dual.worst <= 10.0 * cfg.tolerance;
  dual.detail = "relative";
  out.insert(out.end(), {cons, sym, form, pw, bound, dual});

  // short run from the scenario's initial data
  SimState state = make_state(gamma, initial_density(cfg), initial_signal(cfg));
  StepConfig step;
  step.tau = cfg.tau ? *cfg.tau : default_tau(g, gamma, state.constants.V);
  step.tolerance = cfg.tolerance;
  step.max_iterations = cfg.max_iterations;
  PropertyCheck inv{"state invariants over " + std::to_string(steps) + " steps"};
  PropertyCheck diss{"discrete energy dissipation"};
  PropertyCheck linf{"sup norm of v nonincreasing"};
  try {
    for (int n = 0; n < steps; ++n) {
      SimState next = advance(state, gamma, step);
      const double vsq = dot(state.v, state.v);
      if (vsq > 0.0) diss.worst = std::max(diss.worst, dissipation_defect(state.v, next.v, next.u, step.tau) / vsq);
      linf.worst = std::max(linf.worst, max_abs(next.v) - max_abs(state.v));
      state = std::move(next);
    }
  } catch (const InvariantViolation& e) {
    inv.passed = false;
    inv.detail = e.what();
  }
  diss.passed = diss.worst <= 1e-10;
  linf.passed = linf.worst <= 1e-12 * std::max(1.0, state.constants.V);
  out.insert(out.end(), {inv, diss, linf});
  return out;
}

}  // namespace chemo
