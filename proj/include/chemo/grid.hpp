#pragma once

// Uniform cell-centered grids on intervals and rectangles, fields over them,
// the homogeneous-Neumann five-point Laplacian and the discrete norms built
// on top of it.
//
// Storage is row-major over the axis order: in 2D the cell (i, j) lives at
// index i * cells[1] + j, so the last axis varies fastest.

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "chemo/errors.hpp"

namespace chemo {

struct Grid {
  int dim = 1;
  std::array<double, 2> lengths{1.0, 1.0};
  std::array<int, 2> cells{1, 1};

  static Grid line(double length, int n) { return make(1, {length, 1.0}, {n, 1}); }
  static Grid rect(double lx, double ly, int nx, int ny) { return make(2, {lx, ly}, {nx, ny}); }

  static Grid make(int dim, std::array<double, 2> lengths, std::array<int, 2> cells) {
    if (dim != 1 && dim != 2) throw DomainError("grid dimension must be 1 or 2");
    for (int k = 0; k < dim; ++k) {
      if (!(lengths[k] > 0.0) || !std::isfinite(lengths[k]))
        throw DomainError("grid length must be positive on axis " + std::to_string(k));
      if (cells[k] < 1) throw DomainError("grid needs at least one cell on axis " + std::to_string(k));
    }
    if (dim == 1) {
      lengths[1] = 1.0;
      cells[1] = 1;
    }
    return Grid{dim, lengths, cells};
  }

  double spacing(int axis) const { return lengths[axis] / cells[axis]; }
  std::size_t size() const { return static_cast<std::size_t>(cells[0]) * static_cast<std::size_t>(cells[1]); }
  double cell_volume() const { return dim == 1 ? spacing(0) : spacing(0) * spacing(1); }
  double measure() const { return dim == 1 ? lengths[0] : lengths[0] * lengths[1]; }
  double center(int axis, int i) const { return (i + 0.5) * spacing(axis); }

  bool operator==(const Grid&) const = default;
};

class Field {
 public:
  Field() = default;
  explicit Field(const Grid& grid, double fill = 0.0) : grid_(grid), values_(grid.size(), fill) {}
  Field(const Grid& grid, std::vector<double> values) : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size())
      throw DomainError("field has " + std::to_string(values_.size()) + " values, grid has " +
                        std::to_string(grid_.size()) + " cells");
  }

  const Grid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<double> values() noexcept { return values_; }
  std::span<const double> values() const noexcept { return values_; }
  std::vector<double>& data() noexcept { return values_; }
  const std::vector<double>& data() const noexcept { return values_; }

  double& operator[](std::size_t i) noexcept { return values_[i]; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }

  /// Value at cell (i, j); j is ignored in 1D.
  double& at(int i, int j = 0) { return values_[index(i, j)]; }
  double at(int i, int j = 0) const { return values_[index(i, j)]; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(grid_.cells[1]) + static_cast<std::size_t>(j);
  }

  Grid grid_{};
  std::vector<double> values_;
};

/// Fills a field from a function of the cell-center coordinates.
template <class F>
Field sample(const Grid& grid, F&& f) {
  Field z(grid);
  for (int i = 0; i < grid.cells[0]; ++i) {
    for (int j = 0; j < grid.cells[1]; ++j) {
      const double x = grid.center(0, i);
      const double y = grid.dim == 2 ? grid.center(1, j) : 0.0;
      z.at(i, j) = f(x, y);
    }
  }
  return z;
}

inline void require_same_grid(const Field& a, const Field& b) {
  if (!(a.grid() == b.grid())) throw DomainError("fields live on different grids");
}

inline bool is_finite(const Field& z) {
  return std::all_of(z.data().begin(), z.data().end(), [](double x) { return std::isfinite(x); });
}

/// Cell-quadrature average over the domain.
inline double mean(const Field& z) {
  double sum = 0.0;
  for (double x : z.data()) sum += x;
  return sum * z.grid().cell_volume() / z.grid().measure();
}

/// L2 inner product with cell quadrature.
inline double dot(const Field& a, const Field& b) {
  require_same_grid(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_volume();
}

/// out = a * x + y
inline Field axpy(double a, const Field& x, const Field& y) {
  require_same_grid(x, y);
  Field out(y.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a * x[i] + y[i];
  return out;
}

inline Field shifted(const Field& z, double c) {
  Field out = z;
  for (double& x : out.data()) x += c;
  return out;
}

inline double min_value(const Field& z) { return *std::min_element(z.data().begin(), z.data().end()); }

inline double max_abs(const Field& z) {
  double m = 0.0;
  for (double x : z.data()) m = std::max(m, std::abs(x));
  return m;
}

/// Neumann Laplacian with reflected ghost cells, written into `out`.
/// Both spans must have grid.size() entries and must not alias.
inline void laplacian_apply(const Grid& grid, std::span<const double> z, std::span<double> out) {
  const int nx = grid.cells[0];
  const int ny = grid.cells[1];
  const double ax = 1.0 / (grid.spacing(0) * grid.spacing(0));
  const double ay = grid.dim == 2 ? 1.0 / (grid.spacing(1) * grid.spacing(1)) : 0.0;
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < ny; ++j) {
      const std::size_t c = static_cast<std::size_t>(i) * ny + j;
      const double zc = z[c];
      double acc = 0.0;
      if (i > 0) acc += ax * (z[c - ny] - zc);
      if (i + 1 < nx) acc += ax * (z[c + ny] - zc);
      if (ny > 1) {
        if (j > 0) acc += ay * (z[c - 1] - zc);
        if (j + 1 < ny) acc += ay * (z[c + 1] - zc);
      }
      out[c] = acc;
    }
  }
}

inline Field laplacian_apply(const Field& z) {
  Field out(z.grid());
  laplacian_apply(z.grid(), z.values(), out.values());
  return out;
}

/// Squared discrete gradient norm, defined through the Laplacian quadratic
/// form <z, -Lap z> so that summation by parts holds exactly.
inline double grad_l2_squared(const Field& z) {
  return std::max(0.0, -dot(z, laplacian_apply(z)));
}

inline double grad_l2(const Field& z) { return std::sqrt(grad_l2_squared(z)); }

struct Norms {
  double l1 = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double grad_l2 = 0.0;
  double h1 = 0.0;
  double h2 = 0.0;
  double lap_l2 = 0.0;  // ||Lap z||_2, the second-order part of h2
};

inline Norms norms(const Field& z) {
  const double vol = z.grid().cell_volume();
  const Field lap = laplacian_apply(z);
  double l1 = 0.0, l2sq = 0.0, linf = 0.0, form = 0.0, lapsq = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    l1 += std::abs(z[i]);
    l2sq += z[i] * z[i];
    linf = std::max(linf, std::abs(z[i]));
    form -= z[i] * lap[i];
    lapsq += lap[i] * lap[i];
  }
  Norms n;
  l2sq *= vol;
  const double gradsq = std::max(0.0, form * vol);
  lapsq *= vol;
  n.l1 = l1 * vol;
  n.l2 = std::sqrt(l2sq);
  n.linf = linf;
  n.grad_l2 = std::sqrt(gradsq);
  n.h1 = std::sqrt(l2sq + gradsq);
  n.h2 = std::sqrt(l2sq + gradsq + lapsq);
  n.lap_l2 = std::sqrt(lapsq);
  return n;
}

/// Nonzero eigenvalue of the 1D Neumann Laplacian on n cells of width h:
/// (4/h^2) sin^2(pi k / (2n)), eigenvector cos(pi k (i + 1/2) / n).
inline double neumann_eigenvalue(int n, double h, int k) {
  const double s = std::sin(std::numbers::pi * k / (2.0 * n));
  return 4.0 / (h * h) * s * s;
}

}  // namespace chemo
