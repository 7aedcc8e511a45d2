#pragma once

// Scenario configuration files and initial data.
//
// A scenario file is plain text with `[section]` headers and `key = value`
// lines; `#` starts a comment. Recognised keys:
//
//   [grid]     dim, lengths, cells             (per-axis lists, space or comma separated)
//   [motility] gamma                           (constant:c | exp:chi | rational:k | custom:<file>)
//   [initial]  u = perturbed | gaussian
//              u_level, u_amplitude, u_seed, u_modes          (perturbed)
//              u_center, u_width, u_mass, u_background        (gaussian)
//              v = constant | gaussian
//              v_level, v_center, v_width, v_peak
//   [time]     tau, t_end, cadence
//   [solver]   tolerance, max_iterations
//   [run]      name, mode = n3-strict | free, snapshot_every
//
// Perturbations are sums of Neumann cosine modes with coefficients drawn
// from a seeded mt19937_64 stream, normalised so |perturbation| <= 1.

#include <array>
#include <cmath>
#include <numbers>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chemo/elliptic.hpp"
#include "chemo/errors.hpp"
#include "chemo/grid.hpp"
#include "chemo/motility.hpp"
#include "chemo/stepper.hpp"

namespace chemo {

inline constexpr const char* kGeneratorName = "mt19937_64";

enum class RunMode { n3_strict, free };

inline std::string to_string(RunMode m) { return m == RunMode::n3_strict ? "n3-strict" : "free"; }

struct InitialDensity {
  enum class Kind { perturbed, gaussian } kind = Kind::perturbed;
  double level = 1.0;
  double amplitude = 0.5;
  std::uint64_t seed = 1;
  int modes = 4;
  std::array<double, 2> center{0.5, 0.5};
  double width = 0.1;
  double mass = 1.0;
  double background = 0.0;
};

struct InitialSignal {
  enum class Kind { constant, gaussian } kind = Kind::constant;
  double level = 1.0;
  std::array<double, 2> center{0.5, 0.5};
  double width = 0.1;
  double peak = 1.0;
};

struct ScenarioConfig {
  std::string name = "scenario";
  int dim = 1;
  std::array<double, 2> lengths{1.0, 1.0};
  std::array<int, 2> cells{128, 1};
  std::string gamma = "exp:1";
  std::filesystem::path base_dir;  // resolves relative custom motility tables
  InitialDensity u_init;
  InitialSignal v_init;
  std::optional<double> tau;  // unset: default_tau
  double t_end = 20.0;
  int cadence = 10;
  double tolerance = 1e-12;
  int max_iterations = 20000;
  RunMode mode = RunMode::n3_strict;
  int snapshot_every = 0;  // in outputs; 0 writes only the first and last

  Grid grid() const { return Grid::make(dim, lengths, cells); }

  Motility motility() const {
    Motility m = Motility::parse(gamma, base_dir);
    m.set_require_positive(mode == RunMode::n3_strict);
    return m;
  }
};

/// The canonical acceptance scenario.
inline ScenarioConfig default_scenario() {
  ScenarioConfig c;
  c.name = "default";
  c.tau = 1e-4;
  return c;
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::string t = s;
  for (char& c : t)
    if (c == ',') c = ' ';
  std::istringstream is(t);
  std::vector<std::string> out;
  std::string tok;
  while (is >> tok) out.push_back(tok);
  return out;
}

inline double to_double(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const double x = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(x)) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + s + "'");
  }
}

inline long long to_int(const std::string& key, const std::string& s) {
  try {
    std::size_t used = 0;
    const long long x = std::stoll(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + s + "'");
  }
}

template <class T, class Conv>
std::array<T, 2> to_pair(const std::string& key, const std::string& s, int dim, Conv conv, T fill) {
  const auto items = split_list(s);
  if (static_cast<int>(items.size()) != dim)
    throw ConfigError(key + ": expected " + std::to_string(dim) + " value(s), got " + std::to_string(items.size()));
  std::array<T, 2> out{fill, fill};
  for (int k = 0; k < dim; ++k) out[k] = static_cast<T>(conv(key, items[k]));
  return out;
}

/// Uniform double on [-1, 1) from 53 high bits of the generator.
inline double symmetric_unit(std::mt19937_64& rng) {
  return 2.0 * (static_cast<double>(rng() >> 11) * 0x1.0p-53) - 1.0;
}

}  // namespace detail

/// Parses scenario text. Unknown sections or keys are errors.
inline ScenarioConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {}) {
  std::map<std::string, std::string> kv;
  std::string section;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = detail::trim(std::string_view(t).substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = section + "." + detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (kv.count(key)) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + key);
    kv[key] = value;
  }

  static const std::set<std::string> known = {
      "grid.dim",         "grid.lengths",       "grid.cells",        "motility.gamma",
      "initial.u",        "initial.u_level",    "initial.u_amplitude", "initial.u_seed",
      "initial.u_modes",  "initial.u_center",   "initial.u_width",   "initial.u_mass",
      "initial.u_background", "initial.v",      "initial.v_level",   "initial.v_center",
      "initial.v_width",  "initial.v_peak",     "time.tau",          "time.t_end",
      "time.cadence",     "solver.tolerance",   "solver.max_iterations", "run.name",
      "run.mode",         "run.snapshot_every"};
  for (const auto& [k, v] : kv) {
    if (!known.count(k)) throw ConfigError("unknown key '" + k + "'");
  }

  ScenarioConfig c;
  c.base_dir = base_dir;
  auto get = [&](const std::string& k) -> const std::string* {
    auto it = kv.find(k);
    return it == kv.end() ? nullptr : &it->second;
  };
  auto num = [&](const std::string& k, double& dst) {
    if (auto* s = get(k)) dst = detail::to_double(k, *s);
  };
  auto integer = [&](const std::string& k, auto& dst) {
    if (auto* s = get(k)) dst = static_cast<std::remove_reference_t<decltype(dst)>>(detail::to_int(k, *s));
  };

  integer("grid.dim", c.dim);
  if (c.dim != 1 && c.dim != 2) throw ConfigError("grid.dim must be 1 or 2");
  if (c.dim == 2) c.cells = {64, 64};
  if (auto* s = get("grid.lengths")) c.lengths = detail::to_pair<double>("grid.lengths", *s, c.dim, detail::to_double, 1.0);
  if (auto* s = get("grid.cells")) c.cells = detail::to_pair<int>("grid.cells", *s, c.dim, detail::to_int, 1);
  if (auto* s = get("motility.gamma")) c.gamma = *s;

  if (auto* s = get("initial.u")) {
    if (*s == "perturbed") c.u_init.kind = InitialDensity::Kind::perturbed;
    else if (*s == "gaussian") c.u_init.kind = InitialDensity::Kind::gaussian;
    else throw ConfigError("initial.u must be 'perturbed' or 'gaussian'");
  }
  num("initial.u_level", c.u_init.level);
  num("initial.u_amplitude", c.u_init.amplitude);
  if (auto* s = get("initial.u_seed")) {
    const long long seed = detail::to_int("initial.u_seed", *s);
    if (seed < 0) throw ConfigError("initial.u_seed must be nonnegative");
    c.u_init.seed = static_cast<std::uint64_t>(seed);
  }
  integer("initial.u_modes", c.u_init.modes);
  if (auto* s = get("initial.u_center"))
    c.u_init.center = detail::to_pair<double>("initial.u_center", *s, c.dim, detail::to_double, 0.5);
  num("initial.u_width", c.u_init.width);
  num("initial.u_mass", c.u_init.mass);
  num("initial.u_background", c.u_init.background);

  if (auto* s = get("initial.v")) {
    if (*s == "constant") c.v_init.kind = InitialSignal::Kind::constant;
    else if (*s == "gaussian") c.v_init.kind = InitialSignal::Kind::gaussian;
    else throw ConfigError("initial.v must be 'constant' or 'gaussian'");
  }
  num("initial.v_level", c.v_init.level);
  if (auto* s = get("initial.v_center"))
    c.v_init.center = detail::to_pair<double>("initial.v_center", *s, c.dim, detail::to_double, 0.5);
  num("initial.v_width", c.v_init.width);
  num("initial.v_peak", c.v_init.peak);

  if (auto* s = get("time.tau")) c.tau = detail::to_double("time.tau", *s);
  num("time.t_end", c.t_end);
  integer("time.cadence", c.cadence);
  num("solver.tolerance", c.tolerance);
  integer("solver.max_iterations", c.max_iterations);
  if (auto* s = get("run.name")) c.name = *s;
  if (auto* s = get("run.mode")) {
    if (*s == "n3-strict") c.mode = RunMode::n3_strict;
    else if (*s == "free") c.mode = RunMode::free;
    else throw ConfigError("run.mode must be 'n3-strict' or 'free'");
  }
  integer("run.snapshot_every", c.snapshot_every);
  return c;
}

inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open scenario file: " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  ScenarioConfig c = parse_config(ss.str(), path.parent_path());
  if (c.name == "scenario") c.name = path.stem().string();
  return c;
}

/// Sweep list: one scenario path per line, relative to the list file.
inline std::vector<std::filesystem::path> load_sweep_list(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open sweep list: " + path.string());
  std::vector<std::filesystem::path> out;
  std::string line;
  while (std::getline(is, line)) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    std::filesystem::path p(t);
    if (p.is_relative()) p = path.parent_path() / p;
    out.push_back(p);
  }
  return out;
}

/// Smooth random perturbation with |p| <= 1 and zero discrete mean.
inline Field cosine_perturbation(const Grid& grid, int modes, std::uint64_t seed) {
  if (modes < 1) throw ConfigError("initial.u_modes must be at least 1");
  std::mt19937_64 rng(seed);
  struct Mode {
    int kx, ky;
    double a;
  };
  std::vector<Mode> terms;
  double total = 0.0;
  for (int kx = 0; kx <= modes; ++kx) {
    for (int ky = 0; ky <= (grid.dim == 2 ? modes : 0); ++ky) {
      if (kx == 0 && ky == 0) continue;
      const double a = detail::symmetric_unit(rng);
      terms.push_back({kx, ky, a});
      total += std::abs(a);
    }
  }
  const double lx = grid.lengths[0], ly = grid.lengths[1];
  return sample(grid, [&](double x, double y) {
    double s = 0.0;
    for (const auto& m : terms) s += m.a * std::cos(m.kx * std::numbers::pi * x / lx) * std::cos(m.ky * std::numbers::pi * y / ly);
    return total > 0.0 ? s / total : 0.0;
  });
}

inline Field gaussian_bump(const Grid& grid, std::array<double, 2> center, double width) {
  if (!(width > 0.0)) throw ConfigError("gaussian width must be positive");
  return sample(grid, [&](double x, double y) {
    double r2 = (x - center[0]) * (x - center[0]);
    if (grid.dim == 2) r2 += (y - center[1]) * (y - center[1]);
    return std::exp(-r2 / (2.0 * width * width));
  });
}

inline Field initial_density(const ScenarioConfig& c) {
  const Grid g = c.grid();
  const auto& p = c.u_init;
  Field u(g);
  if (p.kind == InitialDensity::Kind::perturbed) {
    const Field pert = cosine_perturbation(g, p.modes, p.seed);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.level + p.amplitude * pert[i];
  } else {
    Field b = gaussian_bump(g, p.center, p.width);
    const double integral = mean(b) * g.measure();
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = p.background + p.mass * b[i] / integral;
  }
  return u;
}

inline Field initial_signal(const ScenarioConfig& c) {
  const Grid g = c.grid();
  const auto& p = c.v_init;
  if (p.kind == InitialSignal::Kind::constant) return Field(g, p.level);
  Field b = gaussian_bump(g, p.center, p.width);
  for (double& x : b.data()) x = p.level + p.peak * x;
  return b;
}

/// Checks the scenario invariants; in n3-strict mode this includes the
/// hypotheses of the convergence theory (positive mass, gamma > 0 on [0, V]).
inline void validate(const ScenarioConfig& c) {
  try {
    (void)c.grid();
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  if (!(c.t_end > 0.0)) throw ConfigError("time.t_end must be positive");
  if (c.cadence < 1) throw ConfigError("time.cadence must be at least 1");
  if (c.tau && !(*c.tau > 0.0)) throw ConfigError("time.tau must be positive");
  if (!(c.tolerance > 0.0)) throw ConfigError("solver.tolerance must be positive");
  if (c.max_iterations < 1) throw ConfigError("solver.max_iterations must be at least 1");
  if (c.snapshot_every < 0) throw ConfigError("run.snapshot_every must be nonnegative");
  const Field u = initial_density(c);
  const Field v = initial_signal(c);
  if (min_value(u) < 0.0) throw ConfigError("initial density has negative values");
  if (min_value(v) < 0.0) throw ConfigError("initial signal has negative values");
  const Motility m = c.motility();
  try {
    (void)derive_constants(m, u, v);
  } catch (const AssumptionViolation& e) {
    throw ConfigError(std::string("scenario violates the positivity hypotheses: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace chemo
