#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include "vortexlab/background.hpp"
#include "vortexlab/discretization.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"
#include "vortexlab/model.hpp"
#include "vortexlab/radial.hpp"
#include "vortexlab/solver.hpp"

namespace vortexlab {

struct FluxReport {
  double flux1 = 0.0;
  double flux2 = 0.0;
};

/// flux_i = int (k_i1 e^{u1} + k_i2 e^{u2} - 1) dx; the identities give -pi N_i.
inline FluxReport flux_report(const Solution& sol, const CouplingMatrix& K) {
  const Grid2D& g = sol.amp1.grid();
  ScalarField f1(g), f2(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    f1[k] = K.k11 * sol.amp1[k] + K.k12 * sol.amp2[k] - 1.0;
    f2[k] = K.k21 * sol.amp1[k] + K.k22 * sol.amp2[k] - 1.0;
  }
  return {integrate(f1), integrate(f2)};
}

/// Physical flux int B12 dx = 2 p rho_bar flux_i.
inline FluxReport physical_flux(const FluxReport& f, const PhysicalParams& pp) {
  const double s = 2.0 * pp.p * pp.rho_bar;
  return {s * f.flux1, s * f.flux2};
}

/// Measured int e^{u_i} dx on the torus.
inline std::pair<double, double> eta_report(const Solution& sol, const DomainSpec& domain) {
  if (!domain.is_torus()) throw Error(ErrorCode::WrongDomainKind, "eta identities hold on the torus only");
  return {integrate(sol.amp1), integrate(sol.amp2)};
}

/// int (e^{u1} + e^{u2} - 1) dx; expected -pi (N1 + N2)/2.
inline double energy_report(const Solution& sol) {
  const Grid2D& g = sol.amp1.grid();
  ScalarField f(g);
  for (std::size_t k = 0; k < g.size(); ++k) f[k] = sol.amp1[k] + sol.amp2[k] - 1.0;
  return integrate(f);
}

struct FieldMaps {
  ScalarField psi_up_sq, psi_down_sq;
  ScalarField B12, B12_tilde;
  ScalarField b0, b0_tilde;
};

/// Amplitude-level fields from the first-order system (M = 1).
inline FieldMaps field_maps(const Solution& sol, const PhysicalParams& pp) {
  const Grid2D& g = sol.amp1.grid();
  const double p = pp.p, q = pp.q, eB = pp.eB();
  FieldMaps m{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double a = pp.rho_bar * sol.amp1[k];
    const double b = pp.rho_bar * sol.amp2[k];
    m.psi_up_sq[k] = a;
    m.psi_down_sq[k] = b;
    m.B12[k] = 2.0 * (p + q) * a + 2.0 * (p - q) * b - eB;
    m.B12_tilde[k] = 2.0 * (p - q) * a + 2.0 * (p + q) * b - eB;
    m.b0[k] = (p + q) * a + (p - q) * b + eB;
    m.b0_tilde[k] = (p - q) * a + (p + q) * b + eB;
  }
  return m;
}

namespace detail {

/// Nodes within two cells of any vortex, with periodic images on the torus.
inline std::vector<char> vortex_mask(const Grid2D& g, const VortexSet& vs) {
  std::vector<char> mask(g.size(), 0);
  const double rad = 2.0 * std::max(g.hx, g.hy) * (1.0 + 1e-12);
  const double L1 = g.nx * g.hx, L2 = g.ny * g.hy;
  for (const auto* list : {&vs.up, &vs.down}) {
    for (const auto& v : *list) {
      for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
          double dx = g.x(i) - v.x, dy = g.y(j) - v.y;
          if (g.periodic()) {
            dx -= L1 * std::round(dx / L1);
            dy -= L2 * std::round(dy / L2);
          }
          if (std::hypot(dx, dy) <= rad) mask[g.index(i, j)] = 1;
        }
      }
    }
  }
  return mask;
}

}  // namespace detail

/// Sup norm of Lap_h v_i - s_i - 4 (k_i1 e^{u1} + k_i2 e^{u2} - 1) over nodes
/// more than two cells from every vortex (and off the plane's boundary ring).
/// s_i is the lattice source the solve used.
inline double residual_norm(const Solution& sol, const SolveConfig& cfg, const BackgroundData& bg) {
  const Grid2D& g = cfg.grid;
  const auto& K = cfg.K;
  const ScalarField l1 = apply_laplacian(sol.v1);
  const ScalarField l2 = apply_laplacian(sol.v2);
  const auto mask = detail::vortex_mask(g, cfg.vortices);
  double m = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (mask[k] || g.on_ring(i, j)) continue;
      const double r1 = l1[k] - bg.lattice_source_up[k] - 4.0 * (K.k11 * sol.amp1[k] + K.k12 * sol.amp2[k] - 1.0);
      const double r2 = l2[k] - bg.lattice_source_down[k] - 4.0 * (K.k21 * sol.amp1[k] + K.k22 * sol.amp2[k] - 1.0);
      m = std::max({m, std::abs(r1), std::abs(r2)});
    }
  }
  return m;
}

/// Node averages over concentric rings of width `width` about (cx, cy).
struct RingAverages {
  std::vector<double> r;       // mean node radius per ring
  std::vector<double> values;  // mean field value per ring
  std::vector<int> counts;
};

/// Rings partition [r_lo, r_hi] into bins of the given width; empty rings
/// are dropped. Nodes with skip[k] != 0 are left out.
template <class Value>
RingAverages ring_average(const Grid2D& g, double cx, double cy, double r_lo, double r_hi, double width,
                          Value&& value, const std::vector<char>* skip = nullptr) {
  const int nb = std::max(1, static_cast<int>(std::ceil((r_hi - r_lo) / width)));
  std::vector<std::vector<double>> rs(nb), vs(nb);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = g.index(i, j);
      if (skip && (*skip)[k]) continue;
      const double r = std::hypot(g.x(i) - cx, g.y(j) - cy);
      if (r < r_lo || r > r_hi) continue;
      const int b = std::min(nb - 1, static_cast<int>((r - r_lo) / width));
      rs[b].push_back(r);
      vs[b].push_back(value(i, j, k));
    }
  }
  RingAverages out;
  for (int b = 0; b < nb; ++b) {
    if (rs[b].empty()) continue;
    const double n = static_cast<double>(rs[b].size());
    out.r.push_back(pairwise_sum(rs[b]) / n);
    out.values.push_back(pairwise_sum(vs[b]) / n);
    out.counts.push_back(static_cast<int>(rs[b].size()));
  }
  return out;
}

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Unweighted least squares y = intercept + slope x.
inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  LineFit f;
  f.points = static_cast<int>(n);
  if (n < 2) return f;
  const double mx = pairwise_sum(x) / n, my = pairwise_sum(y) / n;
  std::vector<double> sxy(n), sxx(n), syy(n);
  for (std::size_t k = 0; k < n; ++k) {
    sxy[k] = (x[k] - mx) * (y[k] - my);
    sxx[k] = (x[k] - mx) * (x[k] - mx);
    syy[k] = (y[k] - my) * (y[k] - my);
  }
  const double Sxy = pairwise_sum(sxy), Sxx = pairwise_sum(sxx), Syy = pairwise_sum(syy);
  f.slope = Sxy / Sxx;
  f.intercept = my - f.slope * mx;
  f.r2 = Syy > 0.0 ? Sxy * Sxy / (Sxx * Syy) : 1.0;
  return f;
}

struct RingDecay {
  double rate = 0.0;
  double r2 = 0.0;
  int rings = 0;
};

/// Fits ln(ring mean of q) = c - rate r over the annulus [r_lo, r_hi].
/// Rings whose mean is below 1e-24 (round-off territory) are dropped.
inline RingDecay fit_ring_decay(const ScalarField& q, double cx, double cy, double r_lo, double r_hi) {
  const Grid2D& g = q.grid();
  const auto rings = ring_average(g, cx, cy, r_lo, r_hi, std::max(g.hx, g.hy),
                                  [&](int, int, std::size_t k) { return q[k]; });
  std::vector<double> x, y;
  for (std::size_t b = 0; b < rings.r.size(); ++b) {
    if (!(rings.values[b] > 1e-24)) continue;
    x.push_back(rings.r[b]);
    y.push_back(std::log(rings.values[b]));
  }
  if (x.size() < 3) throw Error(ErrorCode::InsufficientDecayWindow, "fewer than three usable rings in the fit annulus");
  const auto f = least_squares(x, y);
  return {-f.slope, f.r2, f.points};
}

struct DecayFit {
  double rate = 0.0;
  double r2 = 0.0;
  double gradient_rate = 0.0;
  double gradient_r2 = 0.0;
};

/// (u1 + ln 2)^2 + (u2 + ln 2)^2 at every node.
inline ScalarField decay_quantity(const Solution& sol) {
  const double ln2 = std::numbers::ln2;
  ScalarField q(sol.u1.grid());
  for (std::size_t k = 0; k < q.size(); ++k) {
    const double a = sol.u1[k] + ln2, b = sol.u2[k] + ln2;
    q[k] = a * a + b * b;
  }
  return q;
}

/// |grad u1|^2 + |grad u2|^2 by central differences (zero on the outer ring).
inline ScalarField gradient_quantity(const Solution& sol) {
  const Grid2D& g = sol.u1.grid();
  ScalarField q(g);
  for (int j = 1; j + 1 < g.ny; ++j) {
    for (int i = 1; i + 1 < g.nx; ++i) {
      double s = 0.0;
      for (const ScalarField* u : {&sol.u1, &sol.u2}) {
        const double dx = (u->at(i + 1, j) - u->at(i - 1, j)) / (2.0 * g.hx);
        const double dy = (u->at(i, j + 1) - u->at(i, j - 1)) / (2.0 * g.hy);
        s += dx * dx + dy * dy;
      }
      q.at(i, j) = s;
    }
  }
  return q;
}

/// Exponential decay rates on the plane over r in [0.5 R, 0.8 R] about the origin.
inline DecayFit decay_fit(const Solution& sol, const DomainSpec& domain) {
  if (domain.is_torus()) throw Error(ErrorCode::WrongDomainKind, "decay fits apply to the plane only");
  const double lo = 0.5 * domain.R, hi = 0.8 * domain.R;
  const Grid2D& g = sol.u1.grid();
  const double ln2 = std::numbers::ln2;
  double dev = 0.0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (std::hypot(g.x(i), g.y(j)) < lo) continue;
      dev = std::max({dev, std::abs(sol.u1.at(i, j) + ln2), std::abs(sol.u2.at(i, j) + ln2)});
    }
  }
  if (dev >= 1e-3) {
    throw Error(ErrorCode::InsufficientDecayWindow, "fields still deviate from -ln 2 by " + std::to_string(dev) +
                                                        " beyond half the truncation radius");
  }
  const auto a = fit_ring_decay(decay_quantity(sol), 0.0, 0.0, lo, hi);
  const auto b = fit_ring_decay(gradient_quantity(sol), 0.0, 0.0, lo, hi);
  return {a.rate, a.r2, b.rate, b.r2};
}

struct ProfileRow {
  double r = 0.0;
  double u1 = 0.0;
  double u2 = 0.0;
  double decay = 0.0;
};

/// Ring means of u1, u2 and the decay quantity about the domain centre,
/// one ring per grid spacing. Nodes on a vortex (u at the sentinel) are
/// left out.
inline std::vector<ProfileRow> radial_profile(const Solution& sol, const DomainSpec& domain) {
  const Grid2D& g = sol.u1.grid();
  const double cx = domain.is_torus() ? domain.L1 / 2 : 0.0;
  const double cy = domain.is_torus() ? domain.L2 / 2 : 0.0;
  const double rmax = domain.is_torus() ? std::min(domain.L1, domain.L2) / 2 : domain.R;
  std::vector<char> skip(g.size(), 0);
  for (std::size_t k = 0; k < g.size(); ++k) skip[k] = sol.amp1[k] == 0.0 || sol.amp2[k] == 0.0;
  const double w = std::max(g.hx, g.hy);
  const ScalarField q = decay_quantity(sol);
  const auto r1 = ring_average(g, cx, cy, 0.0, rmax, w, [&](int, int, std::size_t k) { return sol.u1[k]; }, &skip);
  const auto r2 = ring_average(g, cx, cy, 0.0, rmax, w, [&](int, int, std::size_t k) { return sol.u2[k]; }, &skip);
  const auto rq = ring_average(g, cx, cy, 0.0, rmax, w, [&](int, int, std::size_t k) { return q[k]; }, &skip);
  std::vector<ProfileRow> rows(r1.r.size());
  for (std::size_t b = 0; b < rows.size(); ++b) rows[b] = {r1.r[b], r1.values[b], r2.values[b], rq.values[b]};
  return rows;
}

/// Multiplicities (n1, n2) when every vortex sits at the origin.
inline std::pair<int, int> radial_multiplicities(const VortexSet& vs) {
  for (const auto* list : {&vs.up, &vs.down}) {
    for (const auto& v : *list) {
      if (std::hypot(v.x, v.y) > 1e-12) {
        throw Error(ErrorCode::NotRadiallyReducible, "all vortices must sit at the origin for the radial oracle");
      }
    }
  }
  return {vs.N1(), vs.N2()};
}

struct OracleComparison {
  double max_ring_diff = 0.0;
  double mean_ring_diff = 0.0;
  int rings = 0;
  double rmax = 0.0;
  int newton_iterations_1d = 0;
};

/// Ring-averaged |u_2D - u_1D| over r in [0.5, 0.8 R], maximised over rings
/// and species.
inline OracleComparison compare_with_oracle(const Solution& sol, const DomainSpec& domain, const RadialProfile& prof) {
  if (domain.is_torus()) throw Error(ErrorCode::WrongDomainKind, "the radial oracle lives on the plane");
  const Grid2D& g = sol.u1.grid();
  const double lo = 0.5, hi = 0.8 * domain.R;
  const double w = std::max(g.hx, g.hy);
  auto diff = [&](int species) {
    const ScalarField& u = species == 1 ? sol.u1 : sol.u2;
    return ring_average(g, 0.0, 0.0, lo, hi, w, [&](int i, int j, std::size_t k) {
      return std::abs(u[k] - prof.u_at(species, std::hypot(g.x(i), g.y(j))));
    });
  };
  const auto d1 = diff(1), d2 = diff(2);
  OracleComparison c;
  std::vector<double> all;
  for (const auto* d : {&d1, &d2}) {
    for (double v : d->values) {
      c.max_ring_diff = std::max(c.max_ring_diff, v);
      all.push_back(v);
    }
  }
  c.rings = static_cast<int>(d1.values.size());
  c.mean_ring_diff = all.empty() ? 0.0 : pairwise_sum(all) / static_cast<double>(all.size());
  c.rmax = prof.r.back();
  c.newton_iterations_1d = prof.newton_iterations;
  return c;
}

/// Everything the report carries beyond the solve itself.
struct DiagnosticsReport {
  FluxReport flux;
  FluxReport physical;
  FluxReport expected_flux;
  std::optional<std::pair<double, double>> eta;
  std::optional<AdmissibilityReport> admissibility;
  double energy = 0.0;
  double expected_energy = 0.0;
  std::optional<DecayFit> decay;
  std::optional<Error> decay_error;
  double decay_bound = 0.0;
  double residual_inf = 0.0;
};

inline DiagnosticsReport diagnose(const Solution& sol, const SolveConfig& cfg, const BackgroundData& bg,
                                  const PhysicalParams& pp) {
  const double pi = std::numbers::pi;
  DiagnosticsReport d;
  d.flux = flux_report(sol, cfg.K);
  d.physical = physical_flux(d.flux, pp);
  d.expected_flux = {-pi * cfg.vortices.N1(), -pi * cfg.vortices.N2()};
  d.energy = energy_report(sol);
  d.expected_energy = -pi * (cfg.vortices.N1() + cfg.vortices.N2()) / 2.0;
  d.residual_inf = residual_norm(sol, cfg, bg);
  d.decay_bound = 0.8 * std::sqrt(cfg.K.lambda0);
  if (cfg.domain.is_torus()) {
    d.eta = eta_report(sol, cfg.domain);
    d.admissibility = check_admissibility(cfg.K, cfg.vortices.N1(), cfg.vortices.N2(), cfg.domain.area());
  } else {
    try {
      d.decay = decay_fit(sol, cfg.domain);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InsufficientDecayWindow) throw;
      d.decay_error = e;
    }
  }
  return d;
}

}  // namespace vortexlab
