#pragma once

// Signal-dependent motility gamma(s) and the constants derived from it on
// the range [0, V] of the signal.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "chemo/errors.hpp"

namespace chemo {

enum class MotilityKind { constant, exponential, rational, custom };

/// One tabulated point of a custom motility: (s, gamma(s), gamma'(s)).
struct MotilitySample {
  double s = 0.0;
  double value = 0.0;
  double derivative = 0.0;
};

class Motility {
 public:
  /// gamma(s) = c
  static Motility constant(double c) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("constant motility needs c >= 0");
    Motility m(MotilityKind::constant);
    m.param_ = c;
    return m;
  }

  /// gamma(s) = exp(-chi s)
  static Motility exponential(double chi) {
    if (!(chi > 0.0) || !std::isfinite(chi)) throw ConfigError("exponential motility needs chi > 0");
    Motility m(MotilityKind::exponential);
    m.param_ = chi;
    return m;
  }

  /// gamma(s) = (1 + s)^(-k)
  static Motility rational(double k) {
    if (!(k > 0.0) || !std::isfinite(k)) throw ConfigError("rational motility needs k > 0");
    Motility m(MotilityKind::rational);
    m.param_ = k;
    return m;
  }

  /// Cubic Hermite interpolant through the samples, which must start at
  /// s = 0 and be strictly increasing in s. The interpolant is C^1 and its
  /// derivative is exact, so value and derivative stay consistent.
  static Motility custom(std::vector<MotilitySample> samples) {
    if (samples.size() < 2) throw ConfigError("custom motility needs at least two samples");
    if (samples.front().s != 0.0) throw ConfigError("custom motility samples must start at s = 0");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& p = samples[i];
      if (!std::isfinite(p.s) || !std::isfinite(p.value) || !std::isfinite(p.derivative))
        throw ConfigError("custom motility sample " + std::to_string(i) + " is not finite");
      if (i > 0 && !(p.s > samples[i - 1].s))
        throw ConfigError("custom motility samples must be strictly increasing in s");
    }
    Motility m(MotilityKind::custom);
    m.samples_ = std::move(samples);
    return m;
  }

  /// Reads whitespace-separated (s, gamma, gamma') triples; '#' starts a comment.
  static Motility custom_from_file(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open motility table: " + path.string());
    std::vector<MotilitySample> samples;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      std::istringstream ls(line);
      MotilitySample p;
      if (!(ls >> p.s)) continue;
      if (!(ls >> p.value >> p.derivative))
        throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected 's gamma gamma_prime'");
      samples.push_back(p);
    }
    Motility m = custom(std::move(samples));
    m.source_ = path.string();
    return m;
  }

  /// Parses `constant:1.0`, `exp:0.5`, `rational:2` or `custom:<file>`.
  /// Relative custom paths are resolved against `base_dir`.
  static Motility parse(std::string_view spec, const std::filesystem::path& base_dir = {}) {
    const auto colon = spec.find(':');
    if (colon == std::string_view::npos) throw ConfigError("motility spec needs 'kind:parameter': " + std::string(spec));
    const std::string kind(spec.substr(0, colon));
    const std::string arg(spec.substr(colon + 1));
    if (kind == "custom") {
      std::filesystem::path p(arg);
      if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
      return custom_from_file(p);
    }
    double x = 0.0;
    try {
      std::size_t used = 0;
      x = std::stod(arg, &used);
      if (used != arg.size()) throw std::invalid_argument(arg);
    } catch (const std::exception&) {
      throw ConfigError("motility parameter is not a number: " + std::string(spec));
    }
    if (kind == "constant") return constant(x);
    if (kind == "exp") return exponential(x);
    if (kind == "rational") return rational(x);
    throw ConfigError("unknown motility kind '" + kind + "'");
  }

  MotilityKind kind() const noexcept { return kind_; }
  double parameter() const noexcept { return param_; }
  const std::vector<MotilitySample>& samples() const noexcept { return samples_; }

  /// When set, evaluation refuses nonpositive values (the positivity
  /// hypothesis of the convergence theory). Off for exploratory runs.
  bool require_positive() const noexcept { return require_positive_; }
  Motility& set_require_positive(bool on) noexcept {
    require_positive_ = on;
    return *this;
  }

  /// Upper end of the evaluation domain.
  double domain_end() const noexcept {
    return kind_ == MotilityKind::custom ? samples_.back().s : std::numeric_limits<double>::infinity();
  }

  /// gamma(s) without the positivity check.
  double raw_value(double s) const {
    check_domain(s);
    switch (kind_) {
      case MotilityKind::constant: return param_;
      case MotilityKind::exponential: return std::exp(-param_ * s);
      case MotilityKind::rational: return std::pow(1.0 + s, -param_);
      case MotilityKind::custom: return hermite(s, false);
    }
    return 0.0;
  }

  double operator()(double s) const {
    const double g = raw_value(s);
    if (require_positive_ && !(g > 0.0))
      throw AssumptionViolation("motility is not positive at s = " + std::to_string(s));
    return g;
  }

  double derivative(double s) const {
    check_domain(s);
    switch (kind_) {
      case MotilityKind::constant: return 0.0;
      case MotilityKind::exponential: return -param_ * std::exp(-param_ * s);
      case MotilityKind::rational: return -param_ * std::pow(1.0 + s, -param_ - 1.0);
      case MotilityKind::custom: return hermite(s, true);
    }
    return 0.0;
  }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    switch (kind_) {
      case MotilityKind::constant: os << "constant:" << param_; break;
      case MotilityKind::exponential: os << "exp:" << param_; break;
      case MotilityKind::rational: os << "rational:" << param_; break;
      case MotilityKind::custom: os << "custom:" << (source_.empty() ? "<inline>" : source_); break;
    }
    return os.str();
  }

 private:
  explicit Motility(MotilityKind k) : kind_(k) {}

  void check_domain(double s) const {
    if (!(s >= 0.0)) throw DomainError("motility evaluated at negative s = " + std::to_string(s));
    if (s > domain_end())
      throw DomainError("motility evaluated at s = " + std::to_string(s) + " beyond tabulated range " +
                        std::to_string(domain_end()));
  }

  double hermite(double s, bool want_derivative) const {
    auto it = std::upper_bound(samples_.begin(), samples_.end(), s,
                               [](double x, const MotilitySample& p) { return x < p.s; });
    std::size_t hi = static_cast<std::size_t>(it - samples_.begin());
    hi = std::clamp<std::size_t>(hi, 1, samples_.size() - 1);
    const auto& a = samples_[hi - 1];
    const auto& b = samples_[hi];
    const double h = b.s - a.s;
    const double t = (s - a.s) / h;
    const double t2 = t * t, t3 = t2 * t;
    if (!want_derivative) {
      return (2 * t3 - 3 * t2 + 1) * a.value + (t3 - 2 * t2 + t) * h * a.derivative +
             (-2 * t3 + 3 * t2) * b.value + (t3 - t2) * h * b.derivative;
    }
    return ((6 * t2 - 6 * t) * a.value + (-6 * t2 + 6 * t) * b.value) / h +
           (3 * t2 - 4 * t + 1) * a.derivative + (3 * t2 - 2 * t) * b.derivative;
  }

  MotilityKind kind_;
  double param_ = 0.0;
  std::vector<MotilitySample> samples_;
  std::string source_;
  bool require_positive_ = true;
};

inline double gamma_eval(const Motility& m, double s) { return m(s); }

namespace detail {

inline constexpr int kScanPoints = 2048;

/// Golden-section minimisation of f on [a, b].
inline double golden_min(const std::function<double(double)>& f, double a, double b, double& fmin) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a);
  double d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-15 * (1.0 + std::abs(b)); ++it) {
    if (fc < fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  if (fc < fd) {
    fmin = fc;
    return c;
  }
  fmin = fd;
  return d;
}

/// Minimum of f over [0, V]: dense scan, then golden-section refinement in
/// the bracket around the best scan point.
inline double scan_min(const std::function<double(double)>& f, double V) {
  if (V == 0.0) return f(0.0);
  const int n = kScanPoints;
  std::size_t best = 0;
  double fbest = f(0.0);
  for (int i = 1; i < n; ++i) {
    const double s = (i == n - 1) ? V : V * i / (n - 1);
    const double fs = f(s);
    if (fs < fbest) {
      fbest = fs;
      best = static_cast<std::size_t>(i);
    }
  }
  const double lo = best == 0 ? 0.0 : V * (best - 1) / (n - 1);
  const double hi = best + 1 >= static_cast<std::size_t>(n) ? V : V * (best + 1) / (n - 1);
  double frefined = fbest;
  golden_min(f, lo, hi, frefined);
  return std::min(fbest, frefined);
}

}  // namespace detail

/// min of gamma over [0, V].
inline double gamma_star(const Motility& m, double V) {
  if (!(V >= 0.0)) throw DomainError("gamma_star needs V >= 0");
  const double g = detail::scan_min([&](double s) { return m.raw_value(s); }, V);
  if (m.require_positive() && !(g > 0.0))
    throw AssumptionViolation("motility minimum on [0, V] is not positive: " + std::to_string(g));
  return g;
}

/// sup of |gamma'| over [0, V].
inline double gamma_prime_sup(const Motility& m, double V) {
  if (!(V >= 0.0)) throw DomainError("gamma_prime_sup needs V >= 0");
  return -detail::scan_min([&](double s) { return -std::abs(m.derivative(s)); }, V);
}

/// max of gamma over [0, V]; sets the default time step.
inline double gamma_max(const Motility& m, double V) {
  if (!(V >= 0.0)) throw DomainError("gamma_max needs V >= 0");
  return -detail::scan_min([&](double s) { return -m.raw_value(s); }, V);
}

}  // namespace chemo
