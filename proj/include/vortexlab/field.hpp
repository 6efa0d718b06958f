#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vortexlab/error.hpp"

namespace vortexlab {

/// ln(DBL_MIN); stored in u wherever the amplitude e^u is exactly zero (a
/// vortex on a node), keeping fields finite.
inline constexpr double kVortexLogSentinel = -708.39641853226408;

enum class GridKind { PeriodicCell, DirichletSquare };

/// Uniform node-centred grid. Nodes sit at x0 + i*hx, y0 + j*hy and are stored
/// row-major (index j*nx + i).
///
/// PeriodicCell grids sample [x0, x0+nx*hx) x [y0, y0+ny*hy) and require
/// power-of-two extents. DirichletSquare grids include the boundary ring
/// (i or j equal to 0 or n-1), which holds pinned Dirichlet data.
struct Grid2D {
  int nx = 0;
  int ny = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double hx = 0.0;
  double hy = 0.0;
  GridKind kind = GridKind::PeriodicCell;

  static Grid2D periodic(double L1, double L2, int nx, int ny) {
    auto pow2 = [](int n) { return n > 0 && (n & (n - 1)) == 0; };
    if (!(L1 > 0.0) || !(L2 > 0.0)) {
      throw Error(ErrorCode::InvalidGrid, "periodic cell lengths must be positive");
    }
    if (!pow2(nx) || !pow2(ny) || nx < 4 || ny < 4) {
      throw Error(ErrorCode::InvalidGrid, "periodic grid extents must be powers of two >= 4");
    }
    return Grid2D{nx, ny, 0.0, 0.0, L1 / nx, L2 / ny, GridKind::PeriodicCell};
  }

  /// n nodes per side spanning [-R, R] including both ends.
  static Grid2D dirichlet_square(double R, int n) {
    if (!(R > 0.0)) throw Error(ErrorCode::InvalidGrid, "square half-width must be positive");
    if (n < 3) throw Error(ErrorCode::InvalidGrid, "square grid needs at least 3 nodes per side");
    const double h = 2.0 * R / (n - 1);
    return Grid2D{n, n, -R, -R, h, h, GridKind::DirichletSquare};
  }

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double x(int i) const { return x0 + i * hx; }
  double y(int j) const { return y0 + j * hy; }
  double cell_area() const { return hx * hy; }
  bool periodic() const { return kind == GridKind::PeriodicCell; }

  bool on_ring(int i, int j) const {
    return kind == GridKind::DirichletSquare && (i == 0 || j == 0 || i == nx - 1 || j == ny - 1);
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;
};

/// Grid-sampled real function. Values are finite by construction.
class ScalarField {
 public:
  ScalarField() = default;

  explicit ScalarField(const Grid2D& grid, double fill = 0.0)
      : grid_(grid), values_(grid.size(), fill) {
    if (!std::isfinite(fill)) throw Error(ErrorCode::NonFiniteValue, "fill value is not finite");
  }

  ScalarField(const Grid2D& grid, std::vector<double> values)
      : grid_(grid), values_(std::move(values)) {
    if (values_.size() != grid_.size()) {
      throw Error(ErrorCode::GridMismatch, "value count does not match grid size");
    }
    check_finite();
  }

  template <class Fn>
  static ScalarField sample(const Grid2D& grid, Fn&& fn) {
    ScalarField f(grid);
    for (int j = 0; j < grid.ny; ++j) {
      for (int i = 0; i < grid.nx; ++i) f.values_[grid.index(i, j)] = fn(grid.x(i), grid.y(j));
    }
    f.check_finite();
    return f;
  }

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(int i, int j) { return values_[grid_.index(i, j)]; }
  double at(int i, int j) const { return values_[grid_.index(i, j)]; }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  void check_finite() const {
    for (double v : values_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "field contains NaN or Inf");
    }
  }

 private:
  Grid2D grid_{};
  std::vector<double> values_;
};

inline void require_same_grid(const ScalarField& a, const ScalarField& b) {
  if (!(a.grid() == b.grid())) throw Error(ErrorCode::GridMismatch, "fields live on different grids");
}

/// Fixed-tree pairwise summation; result depends only on the input order.
inline double pairwise_sum(std::span<const double> v) {
  constexpr std::size_t kLeaf = 16;
  if (v.size() <= kLeaf) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

/// Product-rule quadrature hx*hy*sum(values).
inline double integrate(const ScalarField& f) {
  return f.grid().cell_area() * pairwise_sum(f.values());
}

/// Weighted inner product hx*hy*sum(a*b).
inline double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  std::vector<double> prod(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) prod[k] = a[k] * b[k];
  return a.grid().cell_area() * pairwise_sum(prod);
}

inline double max_abs(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a, b);
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace vortexlab
