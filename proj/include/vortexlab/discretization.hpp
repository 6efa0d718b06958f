#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <type_traits>
#include <utility>
#include <vector>

#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"

namespace vortexlab {

namespace detail {

// FFTW's planner is not re-entrant; execution of distinct plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};
struct PlanDestroy {
  void operator()(fftw_plan p) const {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;
using Plan = std::unique_ptr<std::remove_pointer_t<fftw_plan>, PlanDestroy>;

inline RealBuffer alloc_real(std::size_t n) { return RealBuffer(fftw_alloc_real(n)); }
inline ComplexBuffer alloc_complex(std::size_t n) {
  return ComplexBuffer(fftw_alloc_complex(n));
}

}  // namespace detail

/// Laplacian on a Grid2D together with the shifted inverse (shift - Lap)^{-1}.
///
/// Periodic grids use the exact spectral symbol -(kx^2 + ky^2). Dirichlet
/// squares use the 5-point stencil on interior nodes, reading the boundary
/// ring as Dirichlet data, and return zero on the ring. The shifted inverse
/// on a Dirichlet square is diagonalised by the type-I sine transform of the
/// interior block.
///
/// Holds scratch buffers: one operator per thread.
class LaplacianOperator {
 public:
  explicit LaplacianOperator(const Grid2D& grid) : grid_(grid) {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (grid_.periodic()) {
      const int nxc = grid_.nx / 2 + 1;
      real_ = detail::alloc_real(grid_.size());
      spec_ = detail::alloc_complex(static_cast<std::size_t>(grid_.ny) * nxc);
      forward_.reset(fftw_plan_dft_r2c_2d(grid_.ny, grid_.nx, real_.get(), spec_.get(), FFTW_ESTIMATE));
      backward_.reset(fftw_plan_dft_c2r_2d(grid_.ny, grid_.nx, spec_.get(), real_.get(), FFTW_ESTIMATE));
      const double L1 = grid_.nx * grid_.hx;
      const double L2 = grid_.ny * grid_.hy;
      k2_.resize(static_cast<std::size_t>(grid_.ny) * nxc);
      for (int j = 0; j < grid_.ny; ++j) {
        const int mj = j <= grid_.ny / 2 ? j : j - grid_.ny;
        const double ky = 2.0 * std::numbers::pi * mj / L2;
        for (int i = 0; i < nxc; ++i) {
          const double kx = 2.0 * std::numbers::pi * i / L1;
          k2_[static_cast<std::size_t>(j) * nxc + i] = kx * kx + ky * ky;
        }
      }
    } else {
      const int mx = grid_.nx - 2;
      const int my = grid_.ny - 2;
      real_ = detail::alloc_real(static_cast<std::size_t>(mx) * my);
      forward_.reset(fftw_plan_r2r_2d(my, mx, real_.get(), real_.get(), FFTW_RODFT00, FFTW_RODFT00,
                                      FFTW_ESTIMATE));
      k2_.resize(static_cast<std::size_t>(mx) * my);
      auto eig = [](int k, int m, double h) {
        const double s = std::sin(std::numbers::pi * (k + 1) / (2.0 * (m + 1)));
        return 4.0 * s * s / (h * h);
      };
      for (int j = 0; j < my; ++j) {
        for (int i = 0; i < mx; ++i) {
          k2_[static_cast<std::size_t>(j) * mx + i] = eig(i, mx, grid_.hx) + eig(j, my, grid_.hy);
        }
      }
    }
  }

  const Grid2D& grid() const { return grid_; }

  ScalarField apply(const ScalarField& f) const {
    check_grid(f);
    return grid_.periodic() ? apply_spectral(f) : apply_stencil(f);
  }

  /// (shift*I - Lap)^{-1} r. On Dirichlet squares the ring of r is ignored
  /// and the result vanishes on the ring.
  ScalarField solve_shifted(const ScalarField& r, double shift) const {
    check_grid(r);
    if (!(shift > 0.0)) throw Error(ErrorCode::NonPositiveShift, "preconditioner shift must be positive");
    return grid_.periodic() ? solve_spectral(r, shift) : solve_sine(r, shift);
  }

  /// Discrete Dirichlet energy (1/2) int |grad f|^2 whose gradient is -apply(f)
  /// on the unknown nodes (all nodes when periodic, interior nodes otherwise).
  double dirichlet_energy(const ScalarField& f) const {
    check_grid(f);
    if (grid_.periodic()) {
      const ScalarField lap = apply_spectral(f);
      return -0.5 * inner(f, lap);
    }
    std::vector<double> terms;
    terms.reserve(2 * grid_.size());
    const double wx = grid_.hy / grid_.hx;
    const double wy = grid_.hx / grid_.hy;
    for (int j = 0; j < grid_.ny; ++j) {
      for (int i = 0; i + 1 < grid_.nx; ++i) {
        if (grid_.on_ring(i, j) && grid_.on_ring(i + 1, j)) continue;
        const double d = f.at(i + 1, j) - f.at(i, j);
        terms.push_back(wx * d * d);
      }
    }
    for (int j = 0; j + 1 < grid_.ny; ++j) {
      for (int i = 0; i < grid_.nx; ++i) {
        if (grid_.on_ring(i, j) && grid_.on_ring(i, j + 1)) continue;
        const double d = f.at(i, j + 1) - f.at(i, j);
        terms.push_back(wy * d * d);
      }
    }
    return 0.5 * pairwise_sum(terms);
  }

 private:
  void check_grid(const ScalarField& f) const {
    if (!(f.grid() == grid_)) throw Error(ErrorCode::GridMismatch, "field grid differs from operator grid");
  }

  template <class Symbol>
  ScalarField spectral_filter(const ScalarField& f, Symbol&& symbol) const {
    const std::size_t n = grid_.size();
    for (std::size_t k = 0; k < n; ++k) real_[k] = f[k];
    fftw_execute(forward_.get());
    const double norm = 1.0 / static_cast<double>(n);
    for (std::size_t k = 0; k < k2_.size(); ++k) {
      const double s = symbol(k2_[k]) * norm;
      spec_[k][0] *= s;
      spec_[k][1] *= s;
    }
    fftw_execute(backward_.get());
    ScalarField out(grid_);
    for (std::size_t k = 0; k < n; ++k) out[k] = real_[k];
    return out;
  }

  ScalarField apply_spectral(const ScalarField& f) const {
    return spectral_filter(f, [](double k2) { return -k2; });
  }

  ScalarField solve_spectral(const ScalarField& r, double shift) const {
    return spectral_filter(r, [shift](double k2) { return 1.0 / (shift + k2); });
  }

  ScalarField apply_stencil(const ScalarField& f) const {
    ScalarField out(grid_);
    const double ihx2 = 1.0 / (grid_.hx * grid_.hx);
    const double ihy2 = 1.0 / (grid_.hy * grid_.hy);
    for (int j = 1; j + 1 < grid_.ny; ++j) {
      for (int i = 1; i + 1 < grid_.nx; ++i) {
        const double c = f.at(i, j);
        out.at(i, j) = (f.at(i + 1, j) - 2.0 * c + f.at(i - 1, j)) * ihx2 +
                       (f.at(i, j + 1) - 2.0 * c + f.at(i, j - 1)) * ihy2;
      }
    }
    return out;
  }

  ScalarField solve_sine(const ScalarField& r, double shift) const {
    const int mx = grid_.nx - 2;
    const int my = grid_.ny - 2;
    for (int j = 0; j < my; ++j) {
      for (int i = 0; i < mx; ++i) real_[static_cast<std::size_t>(j) * mx + i] = r.at(i + 1, j + 1);
    }
    fftw_execute(forward_.get());
    const double norm = 1.0 / (4.0 * (mx + 1) * (my + 1));
    for (std::size_t k = 0; k < k2_.size(); ++k) real_[k] *= norm / (shift + k2_[k]);
    fftw_execute(forward_.get());
    ScalarField out(grid_);
    for (int j = 0; j < my; ++j) {
      for (int i = 0; i < mx; ++i) out.at(i + 1, j + 1) = real_[static_cast<std::size_t>(j) * mx + i];
    }
    return out;
  }

  Grid2D grid_;
  detail::RealBuffer real_;
  detail::ComplexBuffer spec_;
  detail::Plan forward_;
  detail::Plan backward_;
  std::vector<double> k2_;
};

/// Per-thread operator cache keyed by grid.
inline const LaplacianOperator& laplacian_for(const Grid2D& grid) {
  thread_local std::vector<std::unique_ptr<LaplacianOperator>> cache;
  for (const auto& op : cache) {
    if (op->grid() == grid) return *op;
  }
  if (cache.size() >= 8) cache.erase(cache.begin());
  cache.push_back(std::make_unique<LaplacianOperator>(grid));
  return *cache.back();
}

inline ScalarField apply_laplacian(const ScalarField& f) { return laplacian_for(f.grid()).apply(f); }

/// Componentwise (shift*I - Lap)^{-1}.
inline std::pair<ScalarField, ScalarField> poisson_precondition(const ScalarField& r1, const ScalarField& r2,
                                                                double shift) {
  require_same_grid(r1, r2);
  const auto& op = laplacian_for(r1.grid());
  return {op.solve_shifted(r1, shift), op.solve_shifted(r2, shift)};
}

}  // namespace vortexlab
