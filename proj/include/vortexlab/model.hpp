#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <utility>
#include <vector>

#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"

namespace vortexlab {

/// Couplings of the two Chern-Simons fields and the mean electron density.
/// The external field is tied to the density through the filling factor
/// nu = pi/p, so eB = 2*p*rho_bar is derived, never supplied.
struct PhysicalParams {
  double p = 1.0;
  double q = 2.0;
  double rho_bar = 1.0;

  double eB() const { return 2.0 * p * rho_bar; }
  double filling_factor() const { return std::numbers::pi / p; }
};

/// K = (1/p) [[p+q, p-q], [p-q, p+q]] with its spectral data.
struct CouplingMatrix {
  double k11 = 0.0;
  double k12 = 0.0;
  double k21 = 0.0;
  double k22 = 0.0;
  double det = 0.0;
  double lambda1 = 0.0;  // k11 + k12 = 2
  double lambda2 = 0.0;  // k11 - k12 = 2q/p
  double lambda0 = 0.0;  // 4 * min(lambda1, lambda2), the decay constant

  double min_eigenvalue() const { return std::min(lambda1, lambda2); }
  double sqrt_det() const { return std::sqrt(det); }
};

inline CouplingMatrix coupling_from_pq(double p, double q) {
  if (!std::isfinite(p) || !std::isfinite(q)) {
    throw Error(ErrorCode::NotPositiveDefinite, "p and q must be finite");
  }
  if (p == q) throw Error(ErrorCode::DecoupledSystem, "p equals q; only the coupled system is supported");
  if (!(p * q > 0.0)) {
    throw Error(ErrorCode::NotPositiveDefinite, "K is positive definite only when p*q > 0");
  }
  if (p < 0.0) {
    throw Error(ErrorCode::NonPhysicalFilling, "p < 0 gives a negative filling factor pi/p");
  }
  CouplingMatrix K;
  K.k11 = (p + q) / p;
  K.k22 = K.k11;
  K.k12 = (p - q) / p;
  K.k21 = K.k12;
  K.det = K.k11 * K.k22 - K.k12 * K.k21;
  K.lambda1 = K.k11 + K.k12;
  K.lambda2 = K.k11 - K.k12;
  K.lambda0 = 4.0 * std::min(K.lambda1, K.lambda2);
  return K;
}

inline CouplingMatrix coupling_from(const PhysicalParams& params) {
  if (!(params.rho_bar > 0.0)) {
    throw Error(ErrorCode::NonPhysicalFilling, "average density must be positive");
  }
  return coupling_from_pq(params.p, params.q);
}

struct Vortex {
  double x = 0.0;
  double y = 0.0;
  int multiplicity = 1;

  friend bool operator==(const Vortex&, const Vortex&) = default;
  friend auto operator<=>(const Vortex&, const Vortex&) = default;
};

/// Zeros of psi_up (species 1) and psi_down (species 2).
struct VortexSet {
  std::vector<Vortex> up;
  std::vector<Vortex> down;

  int N1() const { return total(up); }
  int N2() const { return total(down); }
  bool empty() const { return up.empty() && down.empty(); }

  VortexSet swapped() const { return VortexSet{down, up}; }

  friend bool operator==(const VortexSet&, const VortexSet&) = default;

 private:
  static int total(const std::vector<Vortex>& vs) {
    int n = 0;
    for (const auto& v : vs) n += v.multiplicity;
    return n;
  }
};

/// Merges points closer than tol into one vortex carrying the summed multiplicity.
inline std::vector<Vortex> merge_coincident(const std::vector<Vortex>& in, double tol = 1e-12) {
  std::vector<Vortex> out;
  for (const auto& v : in) {
    auto it = std::find_if(out.begin(), out.end(), [&](const Vortex& o) {
      return std::hypot(o.x - v.x, o.y - v.y) <= tol;
    });
    if (it == out.end()) {
      out.push_back(v);
    } else {
      it->multiplicity += v.multiplicity;
    }
  }
  return out;
}

enum class DomainKind { Torus, TruncatedPlane };

struct DomainSpec {
  DomainKind kind = DomainKind::Torus;
  double L1 = 0.0;
  double L2 = 0.0;
  double R = 0.0;

  static DomainSpec torus(double L1, double L2) {
    if (!(L1 > 0.0) || !(L2 > 0.0)) throw Error(ErrorCode::InvalidGrid, "torus lengths must be positive");
    return DomainSpec{DomainKind::Torus, L1, L2, 0.0};
  }
  static DomainSpec plane(double R) {
    if (!(R > 0.0)) throw Error(ErrorCode::InvalidGrid, "truncation half-width must be positive");
    return DomainSpec{DomainKind::TruncatedPlane, 0.0, 0.0, R};
  }

  bool is_torus() const { return kind == DomainKind::Torus; }
  double area() const { return is_torus() ? L1 * L2 : 4.0 * R * R; }
};

inline void validate_vortices(const VortexSet& vs, const DomainSpec& domain) {
  auto check = [&](const std::vector<Vortex>& list, const char* species) {
    for (const auto& v : list) {
      if (v.multiplicity < 1) {
        throw Error(ErrorCode::InvalidVortex, std::string(species) + " vortex multiplicity must be >= 1");
      }
      if (!std::isfinite(v.x) || !std::isfinite(v.y)) {
        throw Error(ErrorCode::InvalidVortex, std::string(species) + " vortex position is not finite");
      }
      const bool inside = domain.is_torus()
                              ? (v.x >= 0.0 && v.x < domain.L1 && v.y >= 0.0 && v.y < domain.L2)
                              : (std::abs(v.x) < domain.R && std::abs(v.y) < domain.R);
      if (!inside) {
        throw Error(ErrorCode::InvalidVortex, std::string(species) + " vortex lies outside the domain");
      }
    }
  };
  check(vs.up, "up");
  check(vs.down, "down");
}

struct AdmissibilityReport {
  double threshold = 0.0;
  double eta1 = 0.0;
  double eta2 = 0.0;
  bool feasible = false;
};

/// Existence test on a doubly periodic cell: a solution exists iff both
/// forced values of integral e^{u_i} are positive, i.e. area > threshold.
inline AdmissibilityReport check_admissibility(const CouplingMatrix& K, int N1, int N2, double area) {
  constexpr double pi = std::numbers::pi;
  const double a1 = K.k22 * N1 - K.k12 * N2;
  const double a2 = K.k11 * N2 - K.k21 * N1;
  AdmissibilityReport r;
  r.threshold = std::max({2.0 * pi / K.det * a1, 2.0 * pi / K.det * a2, 0.0});
  r.eta1 = area / 2.0 - a1 * pi / K.det;
  r.eta2 = area / 2.0 - a2 * pi / K.det;
  r.feasible = r.eta1 > 0.0 && r.eta2 > 0.0;
  return r;
}

/// w1 = v1/sqrt(det), w2 = (k11 v2 - k21 v1)/det, so v = L w with L L^T = (det/k11) K.
inline std::pair<ScalarField, ScalarField> choleski_forward(const ScalarField& v1, const ScalarField& v2,
                                                            const CouplingMatrix& K) {
  require_same_grid(v1, v2);
  ScalarField w1(v1.grid()), w2(v1.grid());
  const double sd = K.sqrt_det();
  for (std::size_t k = 0; k < v1.size(); ++k) {
    w1[k] = v1[k] / sd;
    w2[k] = (K.k11 * v2[k] - K.k21 * v1[k]) / K.det;
  }
  return {std::move(w1), std::move(w2)};
}

inline std::pair<ScalarField, ScalarField> choleski_inverse(const ScalarField& w1, const ScalarField& w2,
                                                            const CouplingMatrix& K) {
  require_same_grid(w1, w2);
  ScalarField v1(w1.grid()), v2(w1.grid());
  const double sd = K.sqrt_det();
  for (std::size_t k = 0; k < w1.size(); ++k) {
    v1[k] = sd * w1[k];
    v2[k] = (K.det * w2[k] + K.k21 * sd * w1[k]) / K.k11;
  }
  return {std::move(v1), std::move(v2)};
}

/// Lower-triangular factor implied by the transformation: v = L w.
inline std::array<double, 4> choleski_factor(const CouplingMatrix& K) {
  const double sd = K.sqrt_det();
  return {sd, 0.0, K.k21 * sd / K.k11, K.det / K.k11};
}

}  // namespace vortexlab
