#pragma once

// Scenario execution: the advance loop with per-step invariant checks,
// diagnostics output, summaries, exponential rate fits and sweeps.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "chemo/diagnostics.hpp"
#include "chemo/elliptic.hpp"
#include "chemo/errors.hpp"
#include "chemo/field_io.hpp"
#include "chemo/grid.hpp"
#include "chemo/motility.hpp"
#include "chemo/scenario.hpp"
#include "chemo/stepper.hpp"

namespace chemo {

/// Process exit codes shared by the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitInvariant = 3, kExitSolver = 4 };

struct RateFit {
  std::string quantity;
  double rate = 0.0;  // q(t) ~ a exp(-rate t)
  double t0 = 0.0;
  double t1 = 0.0;
  double goodness = 0.0;  // coefficient of determination of the log-linear fit
};

/// Least-squares fit of log(quantity) against t over records in [t0, t1].
inline RateFit fit_rate(const std::vector<DiagnosticsRecord>& h, const std::string& quantity, double t0, double t1) {
  if (!(t1 > t0)) throw DomainError("fit window needs t1 > t0");
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (const auto& r : h) {
    if (r.t < t0 - 1e-12 || r.t > t1 + 1e-12) continue;
    const double q = record_field(r, quantity);
    if (!(q > 0.0))
      throw DomainError("fit_rate: " + quantity + " is not positive at t = " + std::to_string(r.t));
    const double y = std::log(q);
    n += 1;
    sx += r.t;
    sy += y;
    sxx += r.t * r.t;
    sxy += r.t * y;
    syy += y * y;
  }
  if (n < 2) throw DomainError("fit_rate needs at least two records in the window");
  const double cxx = sxx - sx * sx / n;
  const double cxy = sxy - sx * sy / n;
  const double cyy = syy - sy * sy / n;
  RateFit f;
  f.quantity = quantity;
  f.t0 = t0;
  f.t1 = t1;
  f.rate = -cxy / cxx;
  f.goodness = cyy > 0.0 ? (cxy * cxy) / (cxx * cyy) : 1.0;
  return f;
}

struct RunSummary {
  std::string name;
  std::string mode;
  std::string motility;
  bool within_assumptions = true;
  std::string generator = kGeneratorName;
  std::uint64_t seed = 0;
  double tau = 0.0;
  long long steps = 0;
  std::size_t outputs = 0;
  DerivedConstants constants;

  double final_t = 0.0;
  double final_uMinusM_L2 = 0.0;
  double final_vH1 = 0.0;
  double final_vLinf = 0.0;
  double final_gradP_L2 = 0.0;
  double final_liapunov = 0.0;
  double initial_vH1 = 0.0;

  bool liapunov_monotone = true;
  double liapunov_max_increase = 0.0;
  bool linf_monotone = true;

  double max_prop6Slack = 0.0;
  double max_lemma7Slack = 0.0;
  double max_g1Slack_positive = 0.0;
  double max_g3Slack_positive = 0.0;
  double max_gradPBoundSlack = 0.0;
  double max_energyIdentityResidual = 0.0;
  double max_dualityIdentityResidual = 0.0;

  // tracked every step, not only at outputs
  double max_mass_drift = 0.0;        // |<u> - M| / M
  double min_u = 0.0;
  double min_v = 0.0;
  double max_vLinf_over_V = 0.0;      // max ||v||_inf - V
  double max_vLinf_increase = 0.0;    // max step-to-step increase of ||v||_inf
  double max_dissipation_defect = 0.0;  // relative to ||v^k||_2^2

  double vL1_rate = std::numeric_limits<double>::quiet_NaN();
  double vL1_rate_goodness = std::numeric_limits<double>::quiet_NaN();
};

struct RunResult {
  std::vector<DiagnosticsRecord> history;
  RunSummary summary;
};

inline void write_summary(std::ostream& os, const RunSummary& s) {
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto num = [&](const char* k, double v) { kv(k, format_double(v)); };
  kv("name", s.name);
  kv("mode", s.mode);
  kv("motility", s.motility);
  kv("within_positivity_hypotheses", s.within_assumptions ? "yes" : "no (outside assumption: gamma > 0 on [0,V], M > 0)");
  kv("generator", s.generator);
  kv("seed", std::to_string(s.seed));
  num("tau", s.tau);
  kv("steps", std::to_string(s.steps));
  kv("outputs", std::to_string(s.outputs));
  num("M", s.constants.M);
  num("V", s.constants.V);
  num("c1", s.constants.c1);
  num("gammaStar", s.constants.gammaStar);
  num("gammaPrimeSup", s.constants.gammaPrimeSup);
  num("c2", s.constants.c2);
  num("c4", s.constants.c4);
  num("c5", s.constants.c5);
  num("final_t", s.final_t);
  num("final_uMinusM_L2", s.final_uMinusM_L2);
  num("final_vH1", s.final_vH1);
  num("final_vLinf", s.final_vLinf);
  num("final_gradP_L2", s.final_gradP_L2);
  num("final_liapunov", s.final_liapunov);
  kv("liapunov_monotone", s.liapunov_monotone ? "yes" : "no");
  num("liapunov_max_increase", s.liapunov_max_increase);
  kv("vLinf_monotone", s.linf_monotone ? "yes" : "no");
  num("max_prop6Slack", s.max_prop6Slack);
  num("max_lemma7Slack", s.max_lemma7Slack);
  num("max_g1Slack_positive", s.max_g1Slack_positive);
  num("max_g3Slack_positive", s.max_g3Slack_positive);
  num("max_gradPBoundSlack", s.max_gradPBoundSlack);
  num("max_energyIdentityResidual", s.max_energyIdentityResidual);
  num("max_dualityIdentityResidual", s.max_dualityIdentityResidual);
  num("max_mass_drift", s.max_mass_drift);
  num("min_u", s.min_u);
  num("min_v", s.min_v);
  num("max_vLinf_over_V", s.max_vLinf_over_V);
  num("max_vLinf_increase", s.max_vLinf_increase);
  num("max_dissipation_defect", s.max_dissipation_defect);
  num("vL1_rate", s.vL1_rate);
  num("vL1_rate_goodness", s.vL1_rate_goodness);
}

inline std::string snapshot_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "t_%.6f.field", t);
  return buf;
}

struct RunOptions {
  /// Output directory; empty runs in memory only.
  std::filesystem::path out_dir;
};

namespace detail {

inline void dump_state(const std::filesystem::path& path, const SimState& s) {
  write_snapshot(path, {{"u", s.t, s.u}, {"v", s.t, s.v}});
}

inline void summarize(RunSummary& s, const std::vector<DiagnosticsRecord>& h) {
  const auto& k = s.constants;
  const auto& last = h.back();
  s.outputs = h.size();
  s.final_t = last.t;
  s.final_uMinusM_L2 = last.uMinusM_L2;
  s.final_vH1 = last.vH1;
  s.final_vLinf = last.vLinf;
  s.final_gradP_L2 = last.gradP_L2;
  s.final_liapunov = last.liapunov;
  s.initial_vH1 = h.front().vH1;
  const double eps = 1e-8 * std::max(h.front().liapunov, 1.0);
  s.liapunov_max_increase = 0.0;
  for (std::size_t i = 1; i < h.size(); ++i)
    s.liapunov_max_increase = std::max(s.liapunov_max_increase, h[i].liapunov - h[i - 1].liapunov);
  s.liapunov_monotone = s.liapunov_max_increase <= eps;
  s.linf_monotone = linf_monotonicity_check(h);
  s.max_prop6Slack = -std::numeric_limits<double>::infinity();
  s.max_lemma7Slack = -std::numeric_limits<double>::infinity();
  s.max_gradPBoundSlack = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& r = h[i];
    if (i > 0) {
      s.max_prop6Slack = std::max(s.max_prop6Slack, r.prop6Slack);
      s.max_lemma7Slack = std::max(s.max_lemma7Slack, r.lemma7Slack);
    }
    s.max_g1Slack_positive = std::max(s.max_g1Slack_positive, r.g1Slack);
    s.max_g3Slack_positive = std::max(s.max_g3Slack_positive, r.g3Slack);
    s.max_gradPBoundSlack = std::max(s.max_gradPBoundSlack, gradP_poincare_check(r, k));
    s.max_energyIdentityResidual = std::max(s.max_energyIdentityResidual, r.energyIdentityResidual);
    s.max_dualityIdentityResidual = std::max(s.max_dualityIdentityResidual, r.dualityIdentityResidual);
  }
  if (h.size() < 2) {
    s.max_prop6Slack = 0.0;
    s.max_lemma7Slack = 0.0;
  }
  const double t0 = h.front().t + 0.5 * (last.t - h.front().t);
  try {
    const RateFit f = fit_rate(h, "vL1", t0, last.t);
    s.vL1_rate = f.rate;
    s.vL1_rate_goodness = f.goodness;
  } catch (const DomainError&) {
    // v vanished identically or too few records: no rate
  }
}

}  // namespace detail

/// Runs a scenario to t_end. Throws ConfigError for invalid scenarios,
/// InvariantViolation (after dumping the offending state) when a state
/// invariant breaks, and NoConvergence when a linear solve fails.
inline RunResult run_scenario(const ScenarioConfig& cfg, const RunOptions& opt = {}) {
  validate(cfg);
  const Grid grid = cfg.grid();
  const Motility gamma = cfg.motility();
  SimState state = make_state(gamma, initial_density(cfg), initial_signal(cfg));
  const auto& k = state.constants;

  StepConfig step;
  step.tau = cfg.tau ? *cfg.tau : default_tau(grid, gamma, k.V);
  step.tolerance = cfg.tolerance;
  step.max_iterations = cfg.max_iterations;
  const long long nsteps = std::max<long long>(1, std::llround(cfg.t_end / step.tau));

  RunResult result;
  RunSummary& sum = result.summary;
  sum.name = cfg.name;
  sum.mode = to_string(cfg.mode);
  sum.motility = gamma.describe();
  sum.within_assumptions = k.within_assumptions;
  sum.seed = cfg.u_init.seed;
  sum.tau = step.tau;
  sum.steps = nsteps;
  sum.constants = k;
  sum.min_u = min_value(state.u);
  sum.min_v = min_value(state.v);
  sum.max_vLinf_over_V = max_abs(state.v) - k.V;

  const bool write = !opt.out_dir.empty();
  const auto snap_dir = opt.out_dir / "snapshots";
  if (write) {
    std::filesystem::create_directories(snap_dir);
    detail::dump_state(snap_dir / snapshot_name(0.0), state);
  }

  PoissonWorkspace ws(grid, cfg.tolerance, cfg.max_iterations);
  PoissonWorkspace ws_residual(grid, cfg.tolerance, cfg.max_iterations);
  auto& h = result.history;
  h.reserve(static_cast<std::size_t>(nsteps / cfg.cadence + 2));
  h.push_back(record(state, dual_potential(ws, state.u, k.M)));

  for (long long n = 1; n <= nsteps; ++n) {
    SimState next;
    next.constants = k;
    next.u = step_u(state, gamma, step);
    next.v = step_v(state, next.u, step);
    next.t = static_cast<double>(n) * step.tau;
    try {
      check_invariants(next);
    } catch (const InvariantViolation&) {
      if (write) detail::dump_state(snap_dir / ("abort_" + snapshot_name(next.t)), next);
      throw;
    }

    const double vsq = dot(state.v, state.v);
    const double defect = dissipation_defect(state.v, next.v, next.u, step.tau);
    if (vsq > 0.0) sum.max_dissipation_defect = std::max(sum.max_dissipation_defect, defect / vsq);
    if (k.M > 0.0) sum.max_mass_drift = std::max(sum.max_mass_drift, std::abs(mean(next.u) - k.M) / k.M);
    sum.min_u = std::min(sum.min_u, min_value(next.u));
    sum.min_v = std::min(sum.min_v, min_value(next.v));
    const double vmax_new = max_abs(next.v);
    sum.max_vLinf_over_V = std::max(sum.max_vLinf_over_V, vmax_new - k.V);
    sum.max_vLinf_increase = std::max(sum.max_vLinf_increase, vmax_new - max_abs(state.v));

    if (n % cfg.cadence == 0 || n == nsteps) {
      DiagnosticsRecord r = record(next, dual_potential(ws, next.u, k.M));
      r.energyIdentityResidual = energy_identity_residual(state.v, next.v, next.u, step.tau);
      r.dualityIdentityResidual =
          duality_identity_residual(state.u, next.u, state.v, gamma, k.M, step.tau, ws_residual);
      h.push_back(r);
      if (write && cfg.snapshot_every > 0 && (h.size() - 1) % static_cast<std::size_t>(cfg.snapshot_every) == 0)
        detail::dump_state(snap_dir / snapshot_name(next.t), next);
    }
    state = std::move(next);
  }

  fill_slacks(h, k);
  detail::summarize(sum, h);

  if (write) {
    detail::dump_state(snap_dir / snapshot_name(state.t), state);
    std::ofstream csv(opt.out_dir / "diagnostics.csv");
    write_csv(csv, h);
    std::ofstream txt(opt.out_dir / "summary.txt");
    write_summary(txt, sum);
  }
  return result;
}

struct SweepRow {
  std::string source;
  std::string status = "ok";
  int exit_code = kExitOk;
  std::string message;
  RunSummary summary;
};

/// Exit code for an exception raised by a run.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const DomainError*>(&e)) return kExitConfig;
  if (dynamic_cast<const InvariantViolation*>(&e) || dynamic_cast<const AssumptionViolation*>(&e))
    return kExitInvariant;
  if (dynamic_cast<const NoConvergence*>(&e) || dynamic_cast<const IncompatibilityError*>(&e)) return kExitSolver;
  return kExitSolver;
}

inline std::string status_for(int code) {
  switch (code) {
    case kExitOk: return "ok";
    case kExitConfig: return "config_error";
    case kExitInvariant: return "invariant_violation";
    default: return "solver_failure";
  }
}

/// Runs every scenario independently, at most `workers` at a time. A failing
/// run is recorded in its row and does not stop the sweep.
inline std::vector<SweepRow> sweep(const std::vector<ScenarioConfig>& configs, const std::vector<std::string>& sources,
                                   unsigned workers = std::max(1u, std::thread::hardware_concurrency())) {
  std::vector<SweepRow> rows(configs.size());
  auto run_one = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.source = i < sources.size() ? sources[i] : configs[i].name;
    try {
      row.summary = run_scenario(configs[i]).summary;
    } catch (const std::exception& e) {
      row.exit_code = exit_code_for(e);
      row.status = status_for(row.exit_code);
      row.message = e.what();
      row.summary.name = configs[i].name;
    }
  };
  std::size_t next = 0;
  while (next < configs.size()) {
    std::vector<std::future<void>> batch;
    for (unsigned w = 0; w < workers && next < configs.size(); ++w, ++next)
      batch.push_back(std::async(std::launch::async, run_one, next));
    for (auto& f : batch) f.get();
  }
  return rows;
}

inline void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << "name,source,status,exit_code,motility,seed,tau,final_uMinusM_L2,final_vH1,final_liapunov,"
        "liapunov_monotone,vLinf_monotone,max_prop6Slack,max_lemma7Slack,max_g1Slack_positive,"
        "max_g3Slack_positive,max_gradPBoundSlack,max_mass_drift,max_dissipation_defect,vL1_rate,message\n";
  for (const auto& r : rows) {
    const auto& s = r.summary;
    std::string msg = r.message;
    std::replace(msg.begin(), msg.end(), ',', ';');
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    os << s.name << ',' << r.source << ',' << r.status << ',' << r.exit_code << ',' << s.motility << ',' << s.seed
       << ',' << format_double(s.tau) << ',' << format_double(s.final_uMinusM_L2) << ','
       << format_double(s.final_vH1) << ',' << format_double(s.final_liapunov) << ','
       << (s.liapunov_monotone ? "yes" : "no") << ',' << (s.linf_monotone ? "yes" : "no") << ','
       << format_double(s.max_prop6Slack) << ',' << format_double(s.max_lemma7Slack) << ','
       << format_double(s.max_g1Slack_positive) << ',' << format_double(s.max_g3Slack_positive) << ','
       << format_double(s.max_gradPBoundSlack) << ',' << format_double(s.max_mass_drift) << ','
       << format_double(s.max_dissipation_defect) << ',' << format_double(s.vL1_rate) << ',' << msg << '\n';
  }
}

}  // namespace chemo
