#pragma once

// Solvers for the shifted Neumann systems that appear in one time step,
//
//   (diag(d) - tau Lap) w = b,
//
// with d > 0. Cells flagged in `pinned` are removed from the system and held
// at w = 0 (their couplings vanish on both sides, so the reduced operator is
// still symmetric positive definite). In 1D the tridiagonal system is solved
// directly; in 2D by Jacobi-preconditioned conjugate gradients.

#include <cmath>
#include <span>
#include <vector>

#include "chemo/errors.hpp"
#include "chemo/grid.hpp"

namespace chemo {

struct LinearSolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

struct ShiftedSystem {
  const Grid* grid = nullptr;
  std::span<const double> diag;         // d, one entry per cell
  double tau = 0.0;
  std::span<const unsigned char> pinned;  // empty means no pinned cells

  bool is_pinned(std::size_t i) const { return !pinned.empty() && pinned[i] != 0; }

  /// out = A w
  void apply(std::span<const double> w, std::span<double> out, std::vector<double>& scratch) const {
    const std::size_t n = grid->size();
    scratch.resize(n);
    for (std::size_t i = 0; i < n; ++i) scratch[i] = is_pinned(i) ? 0.0 : w[i];
    laplacian_apply(*grid, scratch, out);
    for (std::size_t i = 0; i < n; ++i) out[i] = is_pinned(i) ? w[i] : diag[i] * w[i] - tau * out[i];
  }

  /// Diagonal of A.
  double diagonal(std::size_t c) const {
    if (is_pinned(c)) return 1.0;
    const int ny = grid->cells[1];
    const int i = static_cast<int>(c / ny);
    const int j = static_cast<int>(c % ny);
    const double ax = 1.0 / (grid->spacing(0) * grid->spacing(0));
    double faces = ax * ((i > 0) + (i + 1 < grid->cells[0]));
    if (grid->dim == 2) {
      const double ay = 1.0 / (grid->spacing(1) * grid->spacing(1));
      faces += ay * ((j > 0) + (j + 1 < ny));
    }
    return diag[c] + tau * faces;
  }
};

namespace detail {

inline double norm2(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

inline double dot_raw(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace detail

/// Thomas algorithm for the 1D case. The matrix is a diagonally dominant
/// M-matrix, so no pivoting is needed and nonnegative data stay nonnegative.
inline LinearSolveStats solve_tridiagonal(const ShiftedSystem& sys, std::span<const double> b, std::span<double> x) {
  const Grid& g = *sys.grid;
  const int n = g.cells[0];
  const double off = -sys.tau / (g.spacing(0) * g.spacing(0));
  std::vector<double> cprime(static_cast<std::size_t>(n));
  std::vector<double> dprime(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const bool pi = sys.is_pinned(ui);
    const double lower = (!pi && i > 0 && !sys.is_pinned(ui - 1)) ? off : 0.0;
    const double upper = (!pi && i + 1 < n && !sys.is_pinned(ui + 1)) ? off : 0.0;
    const double rhs = pi ? 0.0 : b[ui];
    const double diag = sys.diagonal(ui);
    if (i == 0) {
      cprime[0] = upper / diag;
      dprime[0] = rhs / diag;
    } else {
      const double denom = diag - lower * cprime[ui - 1];
      cprime[ui] = upper / denom;
      dprime[ui] = (rhs - lower * dprime[ui - 1]) / denom;
    }
  }
  x[static_cast<std::size_t>(n - 1)] = dprime[static_cast<std::size_t>(n - 1)];
  for (int i = n - 2; i >= 0; --i) {
    const auto ui = static_cast<std::size_t>(i);
    x[ui] = dprime[ui] - cprime[ui] * x[ui + 1];
  }
  return {1, 0.0};
}

/// Jacobi-preconditioned conjugate gradients. `x` holds the initial guess on
/// entry and the solution on exit.
inline LinearSolveStats solve_pcg(const ShiftedSystem& sys, std::span<const double> b, std::span<double> x,
                                  double tolerance, int max_iterations) {
  const std::size_t n = sys.grid->size();
  std::vector<double> r(n), z(n), p(n), q(n), scratch(n), inv_diag(n), rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    inv_diag[i] = 1.0 / sys.diagonal(i);
    rhs[i] = sys.is_pinned(i) ? 0.0 : b[i];
    if (sys.is_pinned(i)) x[i] = 0.0;
  }
  const double bnorm = detail::norm2(rhs);
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return {0, 0.0};
  }
  sys.apply(x, q, scratch);
  for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
  double rnorm = detail::norm2(r);
  if (rnorm <= tolerance * bnorm) return {0, rnorm / bnorm};
  for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
  p = z;
  double rz = detail::dot_raw(r, z);
  for (int it = 1; it <= max_iterations; ++it) {
    sys.apply(p, q, scratch);
    const double alpha = rz / detail::dot_raw(p, q);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] += alpha * p[i];
      r[i] -= alpha * q[i];
    }
    rnorm = detail::norm2(r);
    if (rnorm <= tolerance * bnorm) return {it, rnorm / bnorm};
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    const double rz_next = detail::dot_raw(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
  }
  throw NoConvergence("shifted Neumann solve did not converge", rnorm / bnorm, max_iterations);
}

/// Dispatches on dimension: banded direct solve in 1D, PCG in 2D.
inline LinearSolveStats solve_shifted(const ShiftedSystem& sys, std::span<const double> b, std::span<double> x,
                                      double tolerance, int max_iterations) {
  if (sys.grid->dim == 1) return solve_tridiagonal(sys, b, x);
  return solve_pcg(sys, b, x, tolerance, max_iterations);
}

}  // namespace chemo
