#pragma once

// Diagnostics evaluated along a trajectory: norms, the Liapunov functional
// L = ||grad P||^2 + c2 ||v||^2, residuals of the two energy identities
// (duality estimate for u, L2 energy for v), and signed slacks of the
// differential and integrated (Gronwall) inequalities of the decay argument.
//
// Time derivatives are forward differences between consecutive records.
// Slacks are reported signed: <= 0 means the inequality holds.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "chemo/elliptic.hpp"
#include "chemo/errors.hpp"
#include "chemo/field_io.hpp"
#include "chemo/grid.hpp"
#include "chemo/motility.hpp"
#include "chemo/stepper.hpp"

namespace chemo {

struct DiagnosticsRecord {
  double t = 0.0;
  double massMean = 0.0;
  double vLinf = 0.0;
  double vL1 = 0.0;
  double vL2 = 0.0;
  double vGradL2 = 0.0;
  double vH1 = 0.0;
  double vH2 = 0.0;
  double uMinusM_L2 = 0.0;
  double gradP_L2 = 0.0;
  double liapunov = 0.0;
  double energyIdentityResidual = 0.0;
  double dualityIdentityResidual = 0.0;
  double prop6Slack = 0.0;
  double lemma7Slack = 0.0;
  double g1Slack = 0.0;
  double g3Slack = 0.0;
  double gradPBoundSlack = 0.0;

  // Kept alongside the CSV columns; not written.
  double vLapL2 = 0.0;
  double uMin = 0.0;
  double vMin = 0.0;
};

inline constexpr std::string_view kCsvColumns[] = {
    "t",         "massMean",         "vLinf",     "vL1",
    "vL2",       "vGradL2",          "vH1",       "vH2",
    "uMinusM_L2", "gradP_L2",        "liapunov",  "energyIdentityResidual",
    "dualityIdentityResidual", "prop6Slack", "lemma7Slack", "g1Slack",
    "g3Slack",   "gradPBoundSlack"};

/// Looks a CSV column up by name.
inline double record_field(const DiagnosticsRecord& r, std::string_view name) {
  const double values[] = {r.t,          r.massMean, r.vLinf,    r.vL1,
                           r.vL2,        r.vGradL2,  r.vH1,      r.vH2,
                           r.uMinusM_L2, r.gradP_L2, r.liapunov, r.energyIdentityResidual,
                           r.dualityIdentityResidual, r.prop6Slack, r.lemma7Slack, r.g1Slack,
                           r.g3Slack,    r.gradPBoundSlack};
  for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) {
    if (kCsvColumns[i] == name) return values[i];
  }
  throw DomainError("unknown diagnostics column '" + std::string(name) + "'");
}

inline void write_csv_header(std::ostream& os) {
  for (std::size_t i = 0; i < std::size(kCsvColumns); ++i) os << (i ? "," : "") << kCsvColumns[i];
  os << '\n';
}

inline void write_csv_row(std::ostream& os, const DiagnosticsRecord& r) {
  for (std::size_t i = 0; i < std::size(kCsvColumns); ++i)
    os << (i ? "," : "") << format_double(record_field(r, kCsvColumns[i]));
  os << '\n';
}

inline void write_csv(std::ostream& os, const std::vector<DiagnosticsRecord>& history) {
  write_csv_header(os);
  for (const auto& r : history) write_csv_row(os, r);
}

/// Norms, dual-potential quantities and the Liapunov value of a state.
/// P must be the dual potential of s.u.
inline DiagnosticsRecord record(const SimState& s, const Field& P) {
  const auto& k = s.constants;
  DiagnosticsRecord r;
  r.t = s.t;
  r.massMean = mean(s.u);
  const Norms nv = norms(s.v);
  r.vLinf = nv.linf;
  r.vL1 = nv.l1;
  r.vL2 = nv.l2;
  r.vGradL2 = nv.grad_l2;
  r.vH1 = nv.h1;
  r.vH2 = nv.h2;
  r.vLapL2 = nv.lap_l2;
  const Field dev = shifted(s.u, -k.M);
  r.uMinusM_L2 = std::sqrt(dot(dev, dev));
  r.gradP_L2 = grad_l2(P);
  r.liapunov = r.gradP_L2 * r.gradP_L2 + k.c2 * r.vL2 * r.vL2;
  r.gradPBoundSlack = r.gradP_L2 - k.c1 * r.uMinusM_L2;
  r.uMin = min_value(s.u);
  r.vMin = min_value(s.v);
  return r;
}

/// |d/dt ||v||^2 + 2 ||grad v||^2 + 2 ||v sqrt(u)||^2| with the derivative
/// replaced by the step difference and the rest taken at the new time.
inline double energy_identity_residual(const Field& v_old, const Field& v_new, const Field& u_new, double tau) {
  require_same_grid(v_old, v_new);
  require_same_grid(v_new, u_new);
  double absorption = 0.0;
  for (std::size_t i = 0; i < v_new.size(); ++i) absorption += u_new[i] * v_new[i] * v_new[i];
  absorption *= v_new.grid().cell_volume();
  return std::abs((dot(v_new, v_new) - dot(v_old, v_old)) / tau + 2.0 * grad_l2_squared(v_new) + 2.0 * absorption);
}

/// ||v+||^2 + 2 tau ||grad v+||^2 + 2 tau sum u+ (v+)^2 vol - ||v||^2.
/// Backward Euler makes this nonpositive up to solver error.
inline double dissipation_defect(const Field& v_old, const Field& v_new, const Field& u_new, double tau) {
  double absorption = 0.0;
  for (std::size_t i = 0; i < v_new.size(); ++i) absorption += u_new[i] * v_new[i] * v_new[i];
  absorption *= v_new.grid().cell_volume();
  return dot(v_new, v_new) + 2.0 * tau * grad_l2_squared(v_new) + 2.0 * tau * absorption - dot(v_old, v_old);
}

/// Residual of the duality identity
///   d/dt ||grad P||^2 = -2 int g (u-M)^2 - 2M int g (u-M),   g = gamma(v_old),
/// across one u-step, with P and P+ the dual potentials of u_old and u_new.
inline double duality_identity_residual(const Field& u_old, const Field& u_new, const Field& v_old,
                                        const Motility& gamma, double M, double tau, PoissonWorkspace& ws) {
  const Field P_old = dual_potential(ws, u_old, M);
  const Field P_new = dual_potential(ws, u_new, M);
  const Field g = motility_field(gamma, v_old);
  double quad = 0.0, lin = 0.0;
  for (std::size_t i = 0; i < u_new.size(); ++i) {
    const double d = u_new[i] - M;
    quad += g[i] * d * d;
    lin += g[i] * d;
  }
  const double vol = u_new.grid().cell_volume();
  quad *= vol;
  lin *= vol;
  return std::abs((grad_l2_squared(P_new) - grad_l2_squared(P_old)) / tau + 2.0 * quad + 2.0 * M * lin);
}

/// (L(t+d) - L(t))/d + gamma_* ||u-M||^2 + c2 ||grad v||^2 at t+d.
inline double prop6_slack(const DiagnosticsRecord& prev, const DiagnosticsRecord& cur, const DerivedConstants& k) {
  const double dt = cur.t - prev.t;
  if (!(dt > 0.0)) throw DomainError("records must be strictly increasing in time");
  return (cur.liapunov - prev.liapunov) / dt + k.gammaStar * cur.uMinusM_L2 * cur.uMinusM_L2 +
         k.c2 * cur.vGradL2 * cur.vGradL2;
}

/// d/dt ||grad v||^2 + 2M ||grad v||^2 + ||Lap v||^2 - V^2 ||u-M||^2 at t+d.
inline double lemma7_slack(const DiagnosticsRecord& prev, const DiagnosticsRecord& cur, const DerivedConstants& k) {
  const double dt = cur.t - prev.t;
  if (!(dt > 0.0)) throw DomainError("records must be strictly increasing in time");
  const double g0 = prev.vGradL2 * prev.vGradL2;
  const double g1 = cur.vGradL2 * cur.vGradL2;
  return (g1 - g0) / dt + 2.0 * k.M * g1 + cur.vLapL2 * cur.vLapL2 -
         k.V * k.V * cur.uMinusM_L2 * cur.uMinusM_L2;
}

/// ||grad P|| - c1 ||u - M||; nonpositive up to solver error.
inline double gradP_poincare_check(const DiagnosticsRecord& r, const DerivedConstants& k) {
  return r.gradP_L2 - k.c1 * r.uMinusM_L2;
}

struct GronwallSlacks {
  std::vector<double> g1;  // ||grad v||^2 minus its bound
  std::vector<double> g3;  // ||v||_1 minus its bound
};

/// Left-minus-right of the two integrated bounds
///   ||grad v(t)||^2 <= ||grad v(0)||^2 e^{-2Mt} + V^2 int_0^t e^{2M(s-t)} ||u-M||^2 ds,
///   ||v(t)||_1     <= ||v(0)||_1 e^{-Mt} + c1 int_0^t e^{M(s-t)} ||u-M|| ||grad v|| ds,
/// with the convolutions advanced recursively by the trapezoidal rule.
inline GronwallSlacks gronwall_bounds(const std::vector<DiagnosticsRecord>& h, const DerivedConstants& k) {
  if (h.empty()) throw DomainError("gronwall_bounds needs at least one record");
  GronwallSlacks out;
  out.g1.resize(h.size());
  out.g3.resize(h.size());
  const auto f1 = [](const DiagnosticsRecord& r) { return r.uMinusM_L2 * r.uMinusM_L2; };
  const auto f3 = [](const DiagnosticsRecord& r) { return r.uMinusM_L2 * r.vGradL2; };
  const double grad0 = h.front().vGradL2 * h.front().vGradL2;
  const double l1_0 = h.front().vL1;
  const double t0 = h.front().t;
  double conv1 = 0.0, conv3 = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (i > 0) {
      const double dt = h[i].t - h[i - 1].t;
      if (!(dt > 0.0)) throw DomainError("records must be strictly increasing in time");
      const double e2 = std::exp(-2.0 * k.M * dt);
      const double e1 = std::exp(-k.M * dt);
      conv1 = e2 * conv1 + 0.5 * dt * (e2 * f1(h[i - 1]) + f1(h[i]));
      conv3 = e1 * conv3 + 0.5 * dt * (e1 * f3(h[i - 1]) + f3(h[i]));
    }
    const double t = h[i].t - t0;
    out.g1[i] = h[i].vGradL2 * h[i].vGradL2 - (grad0 * std::exp(-2.0 * k.M * t) + k.V * k.V * conv1);
    out.g3[i] = h[i].vL1 - (l1_0 * std::exp(-k.M * t) + k.c1 * conv3);
  }
  return out;
}

struct WindowIntegrals {
  double tStart = 0.0;
  double uDevIntegral = 0.0;
  double vH2Integral = 0.0;
};

/// Trapezoidal integrals of ||u-M||^2 and ||v||_{H2}^2 over [t, t+1], with
/// linear interpolation at window ends that fall between records.
inline WindowIntegrals window_integrals(const std::vector<DiagnosticsRecord>& h, double t) {
  const double a = t, b = t + 1.0;
  const double slack = 1e-9;
  if (h.empty() || h.front().t > a + slack || h.back().t < b - slack)
    throw DomainError("history does not cover the window [" + std::to_string(a) + ", " + std::to_string(b) + "]");
  const auto f1 = [](const DiagnosticsRecord& r) { return r.uMinusM_L2 * r.uMinusM_L2; };
  const auto f2 = [](const DiagnosticsRecord& r) { return r.vH2 * r.vH2; };
  WindowIntegrals w;
  w.tStart = t;
  for (std::size_t i = 1; i < h.size(); ++i) {
    const double s0 = h[i - 1].t, s1 = h[i].t;
    const double lo = std::max(s0, a), hi = std::min(s1, b);
    if (!(hi > lo) || !(s1 > s0)) continue;
    const auto lerp = [&](auto f, double s) {
      const double th = (s - s0) / (s1 - s0);
      return (1.0 - th) * f(h[i - 1]) + th * f(h[i]);
    };
    w.uDevIntegral += 0.5 * (hi - lo) * (lerp(f1, lo) + lerp(f1, hi));
    w.vH2Integral += 0.5 * (hi - lo) * (lerp(f2, lo) + lerp(f2, hi));
  }
  return w;
}

/// True when ||v||_inf never increases by more than `tol` (relative to the
/// initial value, floored at 1) between consecutive records.
inline bool linf_monotonicity_check(const std::vector<DiagnosticsRecord>& h, double tol = 1e-12) {
  if (h.empty()) return true;
  const double scale = std::max(1.0, h.front().vLinf);
  for (std::size_t i = 1; i < h.size(); ++i) {
    if (h[i].vLinf > h[i - 1].vLinf + tol * scale) return false;
  }
  return true;
}

/// Fills prop6Slack, lemma7Slack, g1Slack and g3Slack from the history.
inline void fill_slacks(std::vector<DiagnosticsRecord>& h, const DerivedConstants& k) {
  if (h.empty()) return;
  h.front().prop6Slack = 0.0;
  h.front().lemma7Slack = 0.0;
  for (std::size_t i = 1; i < h.size(); ++i) {
    h[i].prop6Slack = prop6_slack(h[i - 1], h[i], k);
    h[i].lemma7Slack = lemma7_slack(h[i - 1], h[i], k);
  }
  const GronwallSlacks g = gronwall_bounds(h, k);
  for (std::size_t i = 0; i < h.size(); ++i) {
    h[i].g1Slack = g.g1[i];
    h[i].g3Slack = g.g3[i];
  }
}

}  // namespace chemo
