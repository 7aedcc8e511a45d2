#pragma once

// Semi-implicit time stepping for
//
//   u_t = Lap(u gamma(v)),   v_t = Lap v - u v,   homogeneous Neumann.
//
// The u-step is backward Euler with gamma frozen at the old signal:
//   (I - tau Lap diag(g)) u+ = u,  g = gamma(v).
// Writing w = g u+ turns this into the symmetric system
//   (diag(1/g) - tau Lap) w = u,
// after which u+ is recovered in flux form u+ = u + tau Lap w, so the
// discrete mass is conserved up to rounding regardless of solver residual.
// Cells with g = 0 (only reachable outside the positivity hypothesis) carry
// w = 0 and receive mass purely through their faces.
//
// The v-step is backward Euler with the fresh density:
//   (I - tau Lap + tau diag(u+)) v+ = v.
// Both matrices are M-matrices, which gives positivity and the discrete
// maximum principle.

#include <cmath>
#include <string>
#include <vector>

#include "chemo/elliptic.hpp"
#include "chemo/errors.hpp"
#include "chemo/grid.hpp"
#include "chemo/linear_solvers.hpp"
#include "chemo/motility.hpp"

namespace chemo {

struct StepConfig {
  double tau = 1e-4;
  double tolerance = 1e-12;
  int max_iterations = 20000;
};

struct SimState {
  Field u;
  Field v;
  double t = 0.0;
  DerivedConstants constants;
};

inline SimState make_state(const Motility& gamma, Field u_in, Field v_in) {
  SimState s;
  s.constants = derive_constants(gamma, u_in, v_in);
  s.u = std::move(u_in);
  s.v = std::move(v_in);
  return s;
}

inline void validate(const StepConfig& cfg) {
  if (!(cfg.tau > 0.0) || !std::isfinite(cfg.tau)) throw DomainError("time step must be positive");
  if (!(cfg.tolerance > 0.0)) throw DomainError("linear tolerance must be positive");
  if (cfg.max_iterations < 1) throw DomainError("iteration budget must be at least 1");
}

/// Motility evaluated cellwise at the signal.
inline Field motility_field(const Motility& gamma, const Field& v) {
  Field g(v.grid());
  for (std::size_t i = 0; i < v.size(); ++i) {
    g[i] = gamma(std::max(v[i], 0.0));
    if (g[i] < 0.0) throw AssumptionViolation("negative motility at cell " + std::to_string(i));
  }
  return g;
}

inline Field step_u(const SimState& state, const Motility& gamma, const StepConfig& cfg) {
  validate(cfg);
  const Grid& grid = state.u.grid();
  const std::size_t n = grid.size();
  const Field g = motility_field(gamma, state.v);

  std::vector<double> diag(n);
  std::vector<unsigned char> pinned(n, 0);
  bool any_pinned = false;
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i] > 0.0) {
      diag[i] = 1.0 / g[i];
    } else {
      diag[i] = 1.0;
      pinned[i] = 1;
      any_pinned = true;
    }
  }
  ShiftedSystem sys{&grid, diag, cfg.tau, any_pinned ? std::span<const unsigned char>(pinned)
                                                     : std::span<const unsigned char>()};
  Field w(grid);
  for (std::size_t i = 0; i < n; ++i) w[i] = g[i] * state.u[i];
  solve_shifted(sys, state.u.values(), w.values(), cfg.tolerance, cfg.max_iterations);

  Field lap = laplacian_apply(w);
  Field u_new(grid);
  for (std::size_t i = 0; i < n; ++i) u_new[i] = state.u[i] + cfg.tau * lap[i];
  return u_new;
}

inline Field step_v(const SimState& state, const Field& u_new, const StepConfig& cfg) {
  validate(cfg);
  require_same_grid(state.v, u_new);
  const Grid& grid = state.v.grid();
  const std::size_t n = grid.size();
  std::vector<double> diag(n);
  const double floor = -1e-12 * std::max(1.0, max_abs(u_new));
  for (std::size_t i = 0; i < n; ++i) {
    if (u_new[i] < floor)
      throw DomainError("signal step needs a nonnegative density");
    diag[i] = 1.0 + cfg.tau * std::max(u_new[i], 0.0);
  }
  ShiftedSystem sys{&grid, diag, cfg.tau, {}};
  Field v_new = state.v;
  solve_shifted(sys, state.v.values(), v_new.values(), cfg.tolerance, cfg.max_iterations);
  return v_new;
}

/// Throws InvariantViolation naming the first breached invariant.
inline void check_invariants(const SimState& s) {
  const auto& k = s.constants;
  if (!is_finite(s.u) || !is_finite(s.v)) throw InvariantViolation("finite", "non-finite value in state");
  const double umax = max_abs(s.u);
  if (min_value(s.u) < -1e-12 * umax)
    throw InvariantViolation("positivity of u", "min u = " + format_sci(min_value(s.u)));
  if (min_value(s.v) < -1e-12 * k.V)
    throw InvariantViolation("positivity of v", "min v = " + format_sci(min_value(s.v)));
  const double drift = std::abs(mean(s.u) - k.M);
  if (drift > 1e-10 * k.M)
    throw InvariantViolation("mass conservation", "|<u> - M| = " + format_sci(drift));
  const double vmax = max_abs(s.v);
  if (vmax > k.V * (1.0 + 1e-12))
    throw InvariantViolation("maximum principle", "||v||_inf = " + format_sci(vmax) + " > V = " + format_sci(k.V));
}

/// One full step: u first, then v with the updated density.
inline SimState advance(const SimState& state, const Motility& gamma, const StepConfig& cfg) {
  SimState next;
  next.constants = state.constants;
  next.u = step_u(state, gamma, cfg);
  next.v = step_v(state, next.u, cfg);
  next.t = state.t + cfg.tau;
  check_invariants(next);
  return next;
}

/// Default time step 0.1 h_min^2 / max gamma on [0, V].
inline double default_tau(const Grid& grid, const Motility& gamma, double V) {
  double h = grid.spacing(0);
  if (grid.dim == 2) h = std::min(h, grid.spacing(1));
  const double gmax = gamma_max(gamma, V);
  return 0.1 * h * h / (gmax > 0.0 ? gmax : 1.0);
}

}  // namespace chemo
