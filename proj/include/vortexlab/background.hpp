#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

#include "vortexlab/discretization.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"
#include "vortexlab/model.hpp"

namespace vortexlab {

/// Green's function of the rectangular torus [0,L1) x [0,L2):
///
///   -Lap G = delta_0 - 1/|Omega|,   G(x) ~ -(1/2pi) ln|x| near 0,
///
/// realised as G = -(1/2pi) ln|theta1(pi (x + i y)/A; q)| + y^2/(2 A B) with
/// q = exp(-pi B/A). The axes are relabelled so that B >= A, which keeps the
/// nome below exp(-pi) and the theta series short.
class TorusGreenEvaluator {
 public:
  TorusGreenEvaluator(double L1, double L2) : L1_(L1), L2_(L2) {
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw Error(ErrorCode::InvalidGrid, "torus lengths must be positive");
    swapped_ = L2 < L1;
    A_ = swapped_ ? L2 : L1;
    B_ = swapped_ ? L1 : L2;
    nome_ = std::exp(-std::numbers::pi * B_ / A_);
    // term n relative to term 0 is bounded by exp(-pi (B/A) n^2) on the reduced cell
    int n = 1;
    while (std::numbers::pi * (B_ / A_) * n * n < 40.0) ++n;
    series_terms_ = n + 2;
  }

  double L1() const { return L1_; }
  double L2() const { return L2_; }
  double nome() const { return nome_; }
  int series_terms() const { return series_terms_; }

  /// G at displacement (dx, dy); +inf exactly at lattice points.
  double operator()(double dx, double dy) const {
    dx = reduce(dx, L1_);
    dy = reduce(dy, L2_);
    const double s = swapped_ ? dy : dx;
    const double t = swapped_ ? dx : dy;
    const double mag = std::abs(theta1(s, t));
    if (mag == 0.0) return std::numeric_limits<double>::infinity();
    return -std::log(mag) / (2.0 * std::numbers::pi) + t * t / (2.0 * A_ * B_);
  }

 private:
  static double reduce(double d, double L) {
    d -= L * std::floor(d / L + 0.5);
    return d;
  }

  std::complex<double> theta1(double s, double t) const {
    const std::complex<double> z(std::numbers::pi * s / A_, std::numbers::pi * t / A_);
    std::complex<double> sum = 0.0;
    for (int n = series_terms_ - 1; n >= 0; --n) {
      const double half = n + 0.5;
      const double coeff = (n % 2 == 0 ? 2.0 : -2.0) * std::pow(nome_, half * half);
      sum += coeff * std::sin(static_cast<double>(2 * n + 1) * z);
    }
    return sum;
  }

  double L1_, L2_;
  double A_ = 0.0, B_ = 0.0;
  bool swapped_ = false;
  double nome_ = 0.0;
  int series_terms_ = 0;
};

inline TorusGreenEvaluator torus_green(const DomainSpec& domain) {
  if (!domain.is_torus()) throw Error(ErrorCode::WrongDomainKind, "torus_green needs a torus domain");
  return TorusGreenEvaluator(domain.L1, domain.L2);
}

/// Singular background functions carried as e^{u0} plus the data the solver
/// needs alongside them.
///
/// source_* is the analytic smooth source (g0 on the plane, 4 pi N/|Omega| on
/// the torus). lattice_source_* is the source the discrete system uses: on the
/// plane it is -Lap_h of the smooth part -sum m ln(mu + |x-p|^2), which makes
/// the discrete u independent of mu; on the torus it equals source_*.
/// ring_v_* holds -u0 on the plane's boundary ring (zero elsewhere and on the
/// torus), so that u = -ln 2 is imposed there.
struct BackgroundData {
  ScalarField exp_u0_up;
  ScalarField exp_u0_down;
  ScalarField source_up;
  ScalarField source_down;
  ScalarField lattice_source_up;
  ScalarField lattice_source_down;
  ScalarField ring_v_up;
  ScalarField ring_v_down;
  double mu = 0.0;
  DomainKind kind = DomainKind::Torus;

  /// Same background with the two species exchanged.
  BackgroundData swapped() const {
    return BackgroundData{exp_u0_down, exp_u0_up, source_down, source_up, lattice_source_down,
                          lattice_source_up, ring_v_down, ring_v_up, mu, kind};
  }
};

/// Unnormalised u0(x) = -4 pi sum_j m_j G(x - p_j).
inline double torus_u0_at(const TorusGreenEvaluator& G, const std::vector<Vortex>& vortices, double x, double y) {
  double u = 0.0;
  for (const auto& v : vortices) u -= 4.0 * std::numbers::pi * v.multiplicity * G(x - v.x, y - v.y);
  return u;
}

namespace detail {

inline ScalarField torus_exp_u0(const TorusGreenEvaluator& G, const std::vector<Vortex>& vortices,
                                const Grid2D& grid) {
  ScalarField e(grid, 1.0);
  if (vortices.empty()) return e;
  std::vector<double> u(grid.size());
  std::vector<char> at_vortex(grid.size(), 0);
  double umax = -std::numeric_limits<double>::infinity();
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      const double val = torus_u0_at(G, vortices, grid.x(i), grid.y(j));
      if (!std::isfinite(val)) {
        at_vortex[k] = 1;
        continue;
      }
      u[k] = val;
      umax = std::max(umax, val);
    }
  }
  for (std::size_t k = 0; k < grid.size(); ++k) e[k] = at_vortex[k] ? 0.0 : std::exp(u[k] - umax);
  return e;
}

}  // namespace detail

inline BackgroundData torus_background(const VortexSet& vortices, const DomainSpec& domain, const Grid2D& grid) {
  if (!domain.is_torus() || !grid.periodic()) {
    throw Error(ErrorCode::WrongDomainKind, "torus_background needs a torus domain and periodic grid");
  }
  validate_vortices(vortices, domain);
  const TorusGreenEvaluator G = torus_green(domain);
  const double area = domain.area();
  BackgroundData bg;
  bg.kind = DomainKind::Torus;
  bg.exp_u0_up = detail::torus_exp_u0(G, vortices.up, grid);
  bg.exp_u0_down = detail::torus_exp_u0(G, vortices.down, grid);
  bg.source_up = ScalarField(grid, 4.0 * std::numbers::pi * vortices.N1() / area);
  bg.source_down = ScalarField(grid, 4.0 * std::numbers::pi * vortices.N2() / area);
  bg.lattice_source_up = bg.source_up;
  bg.lattice_source_down = bg.source_down;
  bg.ring_v_up = ScalarField(grid);
  bg.ring_v_down = ScalarField(grid);
  return bg;
}

inline double default_mu(const VortexSet& vortices) {
  return 16.0 * std::max({1, vortices.N1(), vortices.N2()});
}

namespace detail {

struct PlaneSpecies {
  ScalarField exp_u0, source, lattice_source, ring_v;
};

inline PlaneSpecies plane_species(const std::vector<Vortex>& vortices, double mu, const Grid2D& grid) {
  PlaneSpecies s{ScalarField(grid, 1.0), ScalarField(grid), ScalarField(grid), ScalarField(grid)};
  if (vortices.empty()) return s;
  ScalarField smooth(grid);  // -sum m ln(mu + r^2)
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      double e = 1.0, g = 0.0, sm = 0.0, lift = 0.0;
      for (const auto& v : vortices) {
        const double dx = grid.x(i) - v.x;
        const double dy = grid.y(j) - v.y;
        const double r2 = dx * dx + dy * dy;
        const double ratio = r2 / (mu + r2);
        for (int m = 0; m < v.multiplicity; ++m) e *= ratio;
        g += 4.0 * v.multiplicity * mu / ((mu + r2) * (mu + r2));
        sm -= v.multiplicity * std::log(mu + r2);
        if (grid.on_ring(i, j)) lift += v.multiplicity * std::log1p(mu / r2);
      }
      s.exp_u0[k] = e;
      s.source[k] = g;
      smooth[k] = sm;
      s.ring_v[k] = lift;
    }
  }
  const ScalarField lap = LaplacianOperator(grid).apply(smooth);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const std::size_t k = grid.index(i, j);
      s.lattice_source[k] = grid.on_ring(i, j) ? s.source[k] : -lap[k];
    }
  }
  return s;
}

}  // namespace detail

/// mu-regularised backgrounds on the truncated plane:
///   e^{u0} = prod_j (r_j^2/(mu + r_j^2))^{m_j},  g0 = sum_j 4 m_j mu/(mu + r_j^2)^2.
inline BackgroundData plane_background(const VortexSet& vortices, double mu, const Grid2D& grid) {
  if (!(mu > 0.0) || !std::isfinite(mu)) throw Error(ErrorCode::NonPositiveMu, "mu must be positive");
  if (grid.periodic()) throw Error(ErrorCode::WrongDomainKind, "plane_background needs a Dirichlet square grid");
  validate_vortices(vortices, DomainSpec::plane(-grid.x0));
  auto up = detail::plane_species(vortices.up, mu, grid);
  auto down = detail::plane_species(vortices.down, mu, grid);
  BackgroundData bg;
  bg.kind = DomainKind::TruncatedPlane;
  bg.mu = mu;
  bg.exp_u0_up = std::move(up.exp_u0);
  bg.exp_u0_down = std::move(down.exp_u0);
  bg.source_up = std::move(up.source);
  bg.source_down = std::move(down.source);
  bg.lattice_source_up = std::move(up.lattice_source);
  bg.lattice_source_down = std::move(down.lattice_source);
  bg.ring_v_up = std::move(up.ring_v);
  bg.ring_v_down = std::move(down.ring_v);
  return bg;
}

/// Integral of the analytic g0 for one species over [-half_width, half_width]^2
/// by the product rule at spacing h, without storing a grid. The outer tail
/// left out is about 4 pi N mu/(mu + half_width^2).
inline double plane_source_mass(const std::vector<Vortex>& vortices, double mu, double half_width, double h) {
  if (!(mu > 0.0)) throw Error(ErrorCode::NonPositiveMu, "mu must be positive");
  if (!(half_width > 0.0) || !(h > 0.0)) throw Error(ErrorCode::InvalidGrid, "quadrature square must be nonempty");
  const int n = static_cast<int>(std::lround(2.0 * half_width / h)) + 1;
  std::vector<double> rows(n), row(n);
  for (int j = 0; j < n; ++j) {
    const double y = -half_width + j * h;
    for (int i = 0; i < n; ++i) {
      const double x = -half_width + i * h;
      double g = 0.0;
      for (const auto& v : vortices) {
        const double r2 = (x - v.x) * (x - v.x) + (y - v.y) * (y - v.y);
        g += 4.0 * v.multiplicity * mu / ((mu + r2) * (mu + r2));
      }
      row[i] = g;
    }
    rows[j] = pairwise_sum(row);
  }
  return h * h * pairwise_sum(rows);
}

}  // namespace vortexlab
