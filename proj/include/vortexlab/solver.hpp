#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <tuple>
#include <utility>
#include <vector>

#include "vortexlab/background.hpp"
#include "vortexlab/discretization.hpp"
#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"
#include "vortexlab/model.hpp"

namespace vortexlab {

/// Exponent beyond which the functional reports divergence.
inline constexpr double kMaxExponent = 700.0;

struct SolveConfig {
  CouplingMatrix K;
  VortexSet vortices;
  DomainSpec domain;
  Grid2D grid;
  double mu = 0.0;
  double tol_residual = 1e-10;
  int max_newton = 50;
  double cg_tol = 1e-3;
  double armijo_c = 1e-4;
  double armijo_backtrack = 0.5;
  int max_cg = 1000;

  void validate() const {
    if (!(tol_residual > 0.0) || !(cg_tol > 0.0) || !(armijo_c > 0.0) || !(armijo_backtrack > 0.0) ||
        !(armijo_backtrack < 1.0) || !(cg_tol < 1.0) || !(armijo_c < 1.0)) {
      throw Error(ErrorCode::InvalidConfig, "solver tolerances out of range");
    }
    if (max_newton < 1 || max_cg < 1) throw Error(ErrorCode::InvalidConfig, "iteration limits must be >= 1");
    if (domain.is_torus()) {
      const double L1 = grid.nx * grid.hx, L2 = grid.ny * grid.hy;
      if (!grid.periodic() || std::abs(L1 - domain.L1) > 1e-12 * domain.L1 ||
          std::abs(L2 - domain.L2) > 1e-12 * domain.L2) {
        throw Error(ErrorCode::GridMismatch, "grid does not tile the torus cell");
      }
    } else {
      if (grid.periodic() || std::abs(-grid.x0 - domain.R) > 1e-12 * domain.R) {
        throw Error(ErrorCode::GridMismatch, "grid does not cover the truncation square");
      }
      if (!(mu > 0.0)) throw Error(ErrorCode::NonPositiveMu, "mu must be positive");
    }
    validate_vortices(vortices, domain);
  }
};

/// Choleski variables (w1, w2). On the plane the boundary ring carries the
/// Dirichlet data that pins u = -ln 2.
struct State {
  ScalarField w1;
  ScalarField w2;
};

struct NewtonRecord {
  int iteration = 0;
  double functional = 0.0;
  double residual = 0.0;
  double step = 0.0;
  int cg_iterations = 0;
  bool energy_decrease = true;  // false when accepted on gradient decrease at round-off level
};

struct Solution {
  ScalarField u1, u2;      // ln of the amplitudes; kVortexLogSentinel at vortex nodes
  ScalarField amp1, amp2;  // e^{u_i}
  ScalarField v1, v2;      // u_i - u0_i
  State state;
  int newton_iterations = 0;
  double final_residual = 0.0;
  double functional_value = 0.0;
  std::vector<NewtonRecord> history;
};

/// Smallest plane half-width with sqrt(2 min lambda) (R - r_far) >= 18.
inline double default_plane_radius(const CouplingMatrix& K, const VortexSet& vortices) {
  double far = 0.0;
  for (const auto* list : {&vortices.up, &vortices.down}) {
    for (const auto& v : *list) far = std::max(far, std::hypot(v.x, v.y));
  }
  return far + 18.0 / std::sqrt(2.0 * K.min_eigenvalue());
}

namespace detail {

/// Discrete functional with its pointwise pieces precomputed.
///
/// Pointwise density, with c = 4 on the torus and c = 2 on the plane:
///   f = (c k11/det) (E1 + E2) + lin1 w1 + lin2 w2 + const,
///   E1 = e^{u0'} e^{sqrt(det) w1},  E2 = e^{u0''} e^{(det w2 + k21 sqrt(det) w1)/k11}.
class Functional {
 public:
  Functional(const SolveConfig& cfg, const BackgroundData& bg)
      : cfg_(cfg), bg_(bg), op_(laplacian_for(cfg.grid)), lin1_(cfg.grid), lin2_(cfg.grid) {
    const auto& K = cfg.K;
    sd_ = K.sqrt_det();
    const Grid2D& g = cfg.grid;
    if (!(bg.exp_u0_up.grid() == g)) throw Error(ErrorCode::GridMismatch, "background grid differs from config grid");
    if (cfg.domain.is_torus()) {
      const auto adm = check_admissibility(K, cfg.vortices.N1(), cfg.vortices.N2(), cfg.domain.area());
      if (!adm.feasible) {
        throw Error(ErrorCode::InfeasibleDomain, "cell area is below the existence threshold " +
                                                     std::to_string(adm.threshold));
      }
      c_ = 4.0;
      const double area = cfg.domain.area();
      const double pi = std::numbers::pi;
      const double C1 = 4.0 / sd_ * (1.0 - pi * cfg.vortices.N1() / area);
      const double C2 = 2.0 - 4.0 * pi / (area * K.det) * (K.k11 * cfg.vortices.N2() - K.k21 * cfg.vortices.N1());
      lin1_ = ScalarField(g, -C1);
      lin2_ = ScalarField(g, -C2);
    } else {
      c_ = 2.0;
      for (std::size_t k = 0; k < g.size(); ++k) {
        const double h1 = bg.lattice_source_up[k] / sd_;
        const double h2 = (K.k11 * bg.lattice_source_down[k] - K.k21 * bg.lattice_source_up[k]) / K.det;
        lin1_[k] = h1 - 4.0 / sd_;
        lin2_[k] = h2 - 2.0;
      }
    }
    active_.assign(g.size(), 1);
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        if (g.on_ring(i, j)) active_[g.index(i, j)] = 0;
      }
    }
  }

  const Grid2D& grid() const { return cfg_.grid; }
  bool active(std::size_t k) const { return active_[k] != 0; }

  std::pair<double, double> exponentials(const State& s, std::size_t k) const {
    const auto& K = cfg_.K;
    const double a1 = sd_ * s.w1[k];
    const double a2 = (K.det * s.w2[k] + K.k21 * sd_ * s.w1[k]) / K.k11;
    if (a1 > kMaxExponent || a2 > kMaxExponent) {
      throw Error(ErrorCode::Overflow, "exponent exceeds 700; the iteration is diverging");
    }
    return {bg_.exp_u0_up[k] * std::exp(a1), bg_.exp_u0_down[k] * std::exp(a2)};
  }

  double value(const State& s) const {
    const auto& K = cfg_.K;
    const double ce = c_ * K.k11 / K.det;
    const bool plane = !cfg_.domain.is_torus();
    std::vector<double> dens;
    dens.reserve(grid().size());
    for (std::size_t k = 0; k < grid().size(); ++k) {
      if (!active(k)) continue;
      const auto [E1, E2] = exponentials(s, k);
      double f = ce * (E1 + E2) + lin1_[k] * s.w1[k] + lin2_[k] * s.w2[k];
      if (plane) f -= ce * (bg_.exp_u0_up[k] + bg_.exp_u0_down[k]);
      dens.push_back(f);
    }
    return op_.dirichlet_energy(s.w1) + op_.dirichlet_energy(s.w2) + grid().cell_area() * pairwise_sum(dens);
  }

  std::pair<ScalarField, ScalarField> gradient(const State& s) const {
    const auto& K = cfg_.K;
    ScalarField g1 = op_.apply(s.w1);
    ScalarField g2 = op_.apply(s.w2);
    for (std::size_t k = 0; k < grid().size(); ++k) {
      if (!active(k)) {
        g1[k] = 0.0;
        g2[k] = 0.0;
        continue;
      }
      const auto [E1, E2] = exponentials(s, k);
      g1[k] = -g1[k] + c_ * K.k11 / sd_ * E1 + c_ * K.k21 / sd_ * E2 + lin1_[k];
      g2[k] = -g2[k] + c_ * E2 + lin2_[k];
    }
    return {std::move(g1), std::move(g2)};
  }

  /// Pointwise Hessian blocks (h11, h12, h22) of the density at state s.
  struct Weights {
    std::vector<double> h11, h12, h22;
  };

  Weights weights(const State& s) const {
    const auto& K = cfg_.K;
    Weights w;
    const std::size_t n = grid().size();
    w.h11.assign(n, 0.0);
    w.h12.assign(n, 0.0);
    w.h22.assign(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active(k)) continue;
      const auto [E1, E2] = exponentials(s, k);
      w.h11[k] = c_ * (K.k11 * E1 + K.k21 * K.k21 / K.k11 * E2);
      w.h12[k] = c_ * K.k21 * sd_ / K.k11 * E2;
      w.h22[k] = c_ * K.det / K.k11 * E2;
    }
    return w;
  }

  std::pair<ScalarField, ScalarField> hessian(const Weights& w, const ScalarField& d1, const ScalarField& d2) const {
    ScalarField p1 = masked(d1), p2 = masked(d2);
    ScalarField o1 = op_.apply(p1);
    ScalarField o2 = op_.apply(p2);
    for (std::size_t k = 0; k < grid().size(); ++k) {
      if (!active(k)) {
        o1[k] = 0.0;
        o2[k] = 0.0;
        continue;
      }
      o1[k] = -o1[k] + w.h11[k] * p1[k] + w.h12[k] * p2[k];
      o2[k] = -o2[k] + w.h12[k] * p1[k] + w.h22[k] * p2[k];
    }
    return {std::move(o1), std::move(o2)};
  }

  ScalarField masked(const ScalarField& d) const {
    ScalarField out = d;
    for (std::size_t k = 0; k < out.size(); ++k) {
      if (!active(k)) out[k] = 0.0;
    }
    return out;
  }

  double residual(const ScalarField& g1, const ScalarField& g2) const {
    return std::max(max_abs(g1), max_abs(g2));
  }

  const SolveConfig& config() const { return cfg_; }
  const BackgroundData& background() const { return bg_; }
  const LaplacianOperator& op() const { return op_; }

 private:
  const SolveConfig& cfg_;
  const BackgroundData& bg_;
  const LaplacianOperator& op_;
  double c_ = 4.0;
  double sd_ = 1.0;
  ScalarField lin1_, lin2_;
  std::vector<char> active_;
};

inline double dot2(const ScalarField& a1, const ScalarField& a2, const ScalarField& b1, const ScalarField& b2) {
  return inner(a1, b1) + inner(a2, b2);
}

inline void axpy(double alpha, const ScalarField& x, ScalarField& y) {
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += alpha * x[k];
}

/// Sets the plane boundary ring of the state to w = L^{-1} (ring_v).
inline void apply_ring_data(State& s, const SolveConfig& cfg, const BackgroundData& bg) {
  if (cfg.domain.is_torus()) return;
  const auto& g = cfg.grid;
  const auto [r1, r2] = choleski_forward(bg.ring_v_up, bg.ring_v_down, cfg.K);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (!g.on_ring(i, j)) continue;
      s.w1.at(i, j) = r1.at(i, j);
      s.w2.at(i, j) = r2.at(i, j);
    }
  }
}

struct CgResult {
  ScalarField x1, x2;
  int iterations = 0;
};

/// Preconditioned CG for H x = b with the shifted inverse Laplacian.
inline CgResult pcg(const Functional& F, const Functional::Weights& w, const ScalarField& b1,
                    const ScalarField& b2, double rel_tol, int max_iter, double shift) {
  const Grid2D& g = F.grid();
  CgResult res{ScalarField(g), ScalarField(g), 0};
  ScalarField r1 = b1, r2 = b2;
  const double bnorm = std::sqrt(dot2(b1, b2, b1, b2));
  if (bnorm == 0.0) return res;
  auto [z1, z2] = poisson_precondition(r1, r2, shift);
  z1 = F.masked(z1);
  z2 = F.masked(z2);
  ScalarField p1 = z1, p2 = z2;
  double rz = dot2(r1, r2, z1, z2);
  for (int it = 0; it < max_iter; ++it) {
    const auto [q1, q2] = F.hessian(w, p1, p2);
    const double pq = dot2(p1, p2, q1, q2);
    if (!(pq > 0.0)) throw Error(ErrorCode::NegativeCurvature, "Hessian is not positive definite along a CG direction");
    const double alpha = rz / pq;
    axpy(alpha, p1, res.x1);
    axpy(alpha, p2, res.x2);
    axpy(-alpha, q1, r1);
    axpy(-alpha, q2, r2);
    res.iterations = it + 1;
    if (std::sqrt(dot2(r1, r2, r1, r2)) <= rel_tol * bnorm) break;
    std::tie(z1, z2) = poisson_precondition(r1, r2, shift);
    z1 = F.masked(z1);
    z2 = F.masked(z2);
    const double rz_new = dot2(r1, r2, z1, z2);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < p1.size(); ++k) {
      p1[k] = z1[k] + beta * p1[k];
      p2[k] = z2[k] + beta * p2[k];
    }
  }
  return res;
}

inline bool should_exchange_species(const VortexSet& vs) {
  auto key = [](std::vector<Vortex> list) {
    std::sort(list.begin(), list.end());
    return list;
  };
  const auto up = key(vs.up);
  const auto down = key(vs.down);
  if (vs.N1() != vs.N2()) return vs.N2() > vs.N1();
  return down < up;
}

}  // namespace detail

/// w = 0 at every unknown node, plus the plane ring data.
inline State initial_state(const SolveConfig& cfg, const BackgroundData& bg) {
  State s{ScalarField(cfg.grid), ScalarField(cfg.grid)};
  detail::apply_ring_data(s, cfg, bg);
  return s;
}

inline double functional_value(const State& state, const SolveConfig& cfg, const BackgroundData& bg) {
  return detail::Functional(cfg, bg).value(state);
}

inline std::pair<ScalarField, ScalarField> functional_gradient(const State& state, const SolveConfig& cfg,
                                                               const BackgroundData& bg) {
  return detail::Functional(cfg, bg).gradient(state);
}

/// Second derivative of the functional applied to dir. Components of dir on
/// the plane boundary ring are ignored (those nodes are not unknowns).
inline std::pair<ScalarField, ScalarField> hessian_matvec(const State& state,
                                                          const std::pair<ScalarField, ScalarField>& dir,
                                                          const SolveConfig& cfg, const BackgroundData& bg) {
  detail::Functional F(cfg, bg);
  return F.hessian(F.weights(state), dir.first, dir.second);
}

/// Maps Choleski variables back to u = u0 + v (plane: v carries the -ln 2 shift).
inline Solution recover_solution(const State& state, const SolveConfig& cfg, const BackgroundData& bg) {
  auto [v1, v2] = choleski_inverse(state.w1, state.w2, cfg.K);
  if (!cfg.domain.is_torus()) {
    const double ln2 = std::numbers::ln2;
    for (std::size_t k = 0; k < v1.size(); ++k) {
      v1[k] -= ln2;
      v2[k] -= ln2;
    }
  }
  Solution sol;
  const Grid2D& g = cfg.grid;
  sol.u1 = ScalarField(g);
  sol.u2 = ScalarField(g);
  sol.amp1 = ScalarField(g);
  sol.amp2 = ScalarField(g);
  auto fill = [](const ScalarField& e0, const ScalarField& v, ScalarField& u, ScalarField& amp) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      amp[k] = e0[k] * std::exp(v[k]);
      u[k] = e0[k] > 0.0 ? std::log(e0[k]) + v[k] : kVortexLogSentinel;
    }
  };
  fill(bg.exp_u0_up, v1, sol.u1, sol.amp1);
  fill(bg.exp_u0_down, v2, sol.u2, sol.amp2);
  sol.v1 = std::move(v1);
  sol.v2 = std::move(v2);
  sol.state = state;
  return sol;
}

/// Damped inexact Newton on the convex functional, in the species order given.
///
/// Each step solves H d = -g by CG preconditioned with (lambda0/2 - Lap)^{-1}
/// to relative tolerance min(cg_tol, |g|_inf), then backtracks until the
/// Armijo condition holds. Once the predicted decrease falls below the
/// round-off level of the functional, a step is accepted if it reduces the
/// gradient norm instead.
inline Solution newton_solve_ordered(const SolveConfig& cfg, const BackgroundData& bg, State state) {
  cfg.validate();
  const detail::Functional F(cfg, bg);
  detail::apply_ring_data(state, cfg, bg);
  const double shift = cfg.K.lambda0 / 2.0;
  std::vector<NewtonRecord> history;

  double I = F.value(state);
  auto [g1, g2] = F.gradient(state);
  double res = F.residual(g1, g2);
  history.push_back({0, I, res, 0.0, 0, true});

  int it = 0;
  while (res > cfg.tol_residual) {
    if (it >= cfg.max_newton) {
      throw Error(ErrorCode::MaxIterationsExceeded,
                  "Newton did not reach the residual tolerance; last residual " + std::to_string(res));
    }
    ++it;
    const auto weights = F.weights(state);
    ScalarField b1 = g1, b2 = g2;
    for (std::size_t k = 0; k < b1.size(); ++k) {
      b1[k] = -b1[k];
      b2[k] = -b2[k];
    }
    const double eta = std::clamp(res, 1e-12, cfg.cg_tol);
    const auto cg = detail::pcg(F, weights, b1, b2, eta, cfg.max_cg, shift);
    const double slope = detail::dot2(g1, g2, cg.x1, cg.x2);

    const double noise = 1e-12 * (1.0 + std::abs(I));
    double t = 1.0;
    for (;;) {
      State trial = state;
      detail::axpy(t, cg.x1, trial.w1);
      detail::axpy(t, cg.x2, trial.w2);
      std::optional<double> It;
      try {
        It = F.value(trial);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Overflow) throw;
      }
      bool accept = false, by_energy = true;
      std::pair<ScalarField, ScalarField> gt;
      if (It && *It <= I + cfg.armijo_c * t * slope && *It < I) {
        accept = true;
        gt = F.gradient(trial);
      } else if (It && std::abs(cfg.armijo_c * t * slope) < noise && *It <= I + noise) {
        gt = F.gradient(trial);
        if (F.residual(gt.first, gt.second) < res) {
          accept = true;
          by_energy = false;
        }
      }
      if (accept) {
        state = std::move(trial);
        I = *It;
        g1 = std::move(gt.first);
        g2 = std::move(gt.second);
        res = F.residual(g1, g2);
        history.push_back({it, I, res, t, cg.iterations, by_energy});
        break;
      }
      t *= cfg.armijo_backtrack;
      if (t < 1e-14) {
        throw Error(ErrorCode::LineSearchStalled,
                    "line search step fell below 1e-14 at residual " + std::to_string(res));
      }
    }
  }

  Solution sol = recover_solution(state, cfg, bg);
  sol.newton_iterations = it;
  sol.final_residual = res;
  sol.functional_value = I;
  sol.history = std::move(history);
  return sol;
}

namespace detail {

inline SolveConfig exchanged(const SolveConfig& cfg) {
  SolveConfig out = cfg;
  out.vortices = cfg.vortices.swapped();
  return out;
}

inline State exchange_state(const State& s, const CouplingMatrix& K) {
  const auto [v1, v2] = choleski_inverse(s.w1, s.w2, K);
  auto [w1, w2] = choleski_forward(v2, v1, K);
  return State{std::move(w1), std::move(w2)};
}

inline Solution exchange_solution(Solution sol, const SolveConfig& cfg) {
  std::swap(sol.u1, sol.u2);
  std::swap(sol.amp1, sol.amp2);
  std::swap(sol.v1, sol.v2);
  sol.state = exchange_state(sol.state, cfg.K);
  return sol;
}

}  // namespace detail

/// Solves from the given initial state. The two species enter symmetrically
/// (k11 = k22, k12 = k21), so the solve runs in a canonical species order and
/// the result is mapped back; exchanging the inputs exchanges the outputs
/// exactly.
inline Solution newton_solve(const SolveConfig& cfg, const BackgroundData& bg, const State& initial) {
  if (detail::should_exchange_species(cfg.vortices)) {
    const SolveConfig swapped = detail::exchanged(cfg);
    Solution sol = newton_solve_ordered(swapped, bg.swapped(), detail::exchange_state(initial, cfg.K));
    return detail::exchange_solution(std::move(sol), cfg);
  }
  return newton_solve_ordered(cfg, bg, initial);
}

inline Solution newton_solve(const SolveConfig& cfg, const BackgroundData& bg) {
  return newton_solve(cfg, bg, State{ScalarField(cfg.grid), ScalarField(cfg.grid)});
}

/// Background matching the config's domain.
inline BackgroundData make_background(const SolveConfig& cfg) {
  if (cfg.domain.is_torus()) return torus_background(cfg.vortices, cfg.domain, cfg.grid);
  return plane_background(cfg.vortices, cfg.mu, cfg.grid);
}

}  // namespace vortexlab
