#pragma once

// Zero-mean Neumann Poisson problem -Lap K = z, <K> = 0, the dual potential
// P = K[u - M], the discrete Poincare-Wirtinger constant, and the chain of
// constants that enter the Liapunov functional.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "chemo/errors.hpp"
#include "chemo/grid.hpp"
#include "chemo/linear_solvers.hpp"
#include "chemo/motility.hpp"

namespace chemo {

struct PoissonWorkspace {
  explicit PoissonWorkspace(const Grid& g, double tol = 1e-12, int max_iter = 20000)
      : grid(g), tolerance(tol), max_iterations(max_iter) {
    if (!(tolerance > 0.0)) throw DomainError("Poisson tolerance must be positive");
    if (max_iterations < 1) throw DomainError("Poisson iteration budget must be at least 1");
  }

  Grid grid;
  double tolerance;
  int max_iterations;

  /// When set, the previous solution seeds the next solve.
  bool warm_start = true;

  // statistics of the last solve
  int last_iterations = 0;
  double last_residual = 0.0;

  // scratch
  std::vector<double> r, p, q;
  std::optional<Field> previous;
};

namespace detail {

inline void remove_mean(std::span<double> x) {
  if (x.empty()) return;
  double s = 0.0;
  for (double v : x) s += v;
  s /= static_cast<double>(x.size());
  for (double& v : x) v -= s;
}

}  // namespace detail

/// Solves -Lap K = z with <K> = 0 by conjugate gradients on the mean-free
/// subspace. Throws IncompatibilityError if z is not mean-free and
/// NoConvergence if the budget runs out.
inline Field poisson_solve(PoissonWorkspace& ws, const Field& z) {
  if (!(z.grid() == ws.grid)) throw DomainError("Poisson workspace and field grids differ");
  const Grid& g = ws.grid;
  const std::size_t n = g.size();
  const double zmax = max_abs(z);
  ws.last_iterations = 0;
  ws.last_residual = 0.0;
  if (zmax == 0.0) return Field(g);
  if (std::abs(mean(z)) > 1e-10 * zmax)
    throw IncompatibilityError("Neumann Poisson right-hand side has nonzero mean " + std::to_string(mean(z)));

  std::vector<double> b(z.data());
  detail::remove_mean(b);
  const double bnorm = detail::norm2(b);

  Field x(g);
  if (ws.warm_start && ws.previous && ws.previous->grid() == g) x = *ws.previous;
  detail::remove_mean(x.values());

  ws.r.assign(n, 0.0);
  ws.p.assign(n, 0.0);
  ws.q.assign(n, 0.0);
  auto& r = ws.r;
  auto& p = ws.p;
  auto& q = ws.q;

  // r = b - (-Lap x)
  laplacian_apply(g, x.values(), q);
  for (std::size_t i = 0; i < n; ++i) r[i] = b[i] + q[i];
  detail::remove_mean(r);
  double rr = detail::dot_raw(r, r);
  double rnorm = std::sqrt(rr);
  int it = 0;
  if (bnorm > 0.0) {
    p = r;
    while (rnorm > ws.tolerance * bnorm) {
      if (it >= ws.max_iterations)
        throw NoConvergence("Neumann Poisson solve did not converge", rnorm / bnorm, it);
      ++it;
      laplacian_apply(g, p, q);
      for (double& v : q) v = -v;
      const double pq = detail::dot_raw(p, q);
      if (!(pq > 0.0)) break;  // search direction collapsed into the kernel
      const double alpha = rr / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      detail::remove_mean(r);
      const double rr_next = detail::dot_raw(r, r);
      const double beta = rr_next / rr;
      rr = rr_next;
      rnorm = std::sqrt(rr);
      for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    }
  }
  detail::remove_mean(x.values());

  // true residual of the returned iterate
  laplacian_apply(g, x.values(), q);
  double res = 0.0;
  for (std::size_t i = 0; i < n; ++i) res += (b[i] + q[i]) * (b[i] + q[i]);
  ws.last_iterations = it;
  ws.last_residual = bnorm > 0.0 ? std::sqrt(res) / bnorm : 0.0;
  ws.previous = x;
  return x;
}

/// c1 = 1/sqrt(lambda_1), lambda_1 the smallest nonzero eigenvalue of -Lap.
inline double poincare_constant(const Grid& g) {
  double lambda1 = std::numeric_limits<double>::infinity();
  for (int k = 0; k < g.dim; ++k) {
    if (g.cells[k] >= 2) lambda1 = std::min(lambda1, neumann_eigenvalue(g.cells[k], g.spacing(k), 1));
  }
  if (!std::isfinite(lambda1)) throw DomainError("a single-cell grid has no Poincare constant");
  return 1.0 / std::sqrt(lambda1);
}

/// P = K[u - M]. The deviation is re-centred twice before the solve: the
/// first shift leaves a mean of order eps * M, which would swamp a deviation
/// that has itself decayed to a tiny fraction of M.
inline Field dual_potential(PoissonWorkspace& ws, const Field& u, double M) {
  const double mu = mean(u);
  if (std::abs(mu - M) > 1e-10 * std::abs(M))
    throw IncompatibilityError("dual potential: mean(u) = " + std::to_string(mu) + " differs from M = " +
                               std::to_string(M));
  Field dev = shifted(u, -mu);
  detail::remove_mean(dev.values());
  return poisson_solve(ws, dev);
}

struct DerivedConstants {
  double M = 0.0;
  double V = 0.0;
  double c1 = 0.0;
  double gammaStar = 0.0;
  double gammaPrimeSup = 0.0;
  double c2 = 0.0;
  double c4 = 0.0;
  double c5 = 0.0;
  /// false when gamma fails to be positive on [0, V] or M = 0
  bool within_assumptions = true;
};

/// Constants of the Liapunov argument for initial data (u_in, v_in).
/// With a strict motility, M <= 0 or a nonpositive minimum of gamma throws;
/// otherwise those cases are flagged and the gamma_*-dependent constants
/// are set to zero.
inline DerivedConstants derive_constants(const Motility& gamma, const Field& u_in, const Field& v_in) {
  require_same_grid(u_in, v_in);
  DerivedConstants k;
  k.M = mean(u_in);
  k.V = max_abs(v_in);
  k.c1 = poincare_constant(u_in.grid());
  if (!(k.M > 0.0)) {
    if (gamma.require_positive()) throw AssumptionViolation("initial mass mean must be positive");
    k.within_assumptions = false;
  }
  k.gammaPrimeSup = gamma_prime_sup(gamma, k.V);
  k.gammaStar = gamma_star(gamma, k.V);
  if (k.gammaStar > 0.0) {
    const double a = k.M * k.c1 * k.gammaPrimeSup;
    k.c2 = a * a / k.gammaStar;
    k.c4 = 2.0 * k.gammaStar / (k.c1 * k.c1);
  } else {
    k.within_assumptions = false;
    k.c2 = 0.0;
    k.c4 = 0.0;
  }
  k.c5 = 2.0 * k.M * k.c1 * k.gammaPrimeSup;
  return k;
}

}  // namespace chemo
