#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "vortexlab/error.hpp"
#include "vortexlab/field.hpp"
#include "vortexlab/model.hpp"

namespace vortexlab {

/// Radially symmetric solution with n1, n2 vortices at the origin.
/// u_i(r) = 2 n_i ln r + reg_i(r); u_i holds kVortexLogSentinel at r = 0
/// when n_i > 0.
struct RadialProfile {
  std::vector<double> r;
  std::vector<double> u1, u2;
  std::vector<double> reg1, reg2;
  int n1 = 0, n2 = 0;
  int newton_iterations = 0;
  double residual = 0.0;

  /// Linear interpolation of u_i at radius s in (0, Rmax].
  double u_at(int species, double s) const {
    const auto& reg = species == 1 ? reg1 : reg2;
    const int n = species == 1 ? n1 : n2;
    const double h = r[1] - r[0];
    const double pos = std::clamp(s / h, 0.0, static_cast<double>(r.size() - 1));
    const std::size_t j = std::min(static_cast<std::size_t>(pos), r.size() - 2);
    const double t = pos - static_cast<double>(j);
    const double val = (1.0 - t) * reg[j] + t * reg[j + 1];
    return n > 0 ? val + 2.0 * n * std::log(s) : val;
  }
};

/// Smallest admissible outer radius for the 1D oracle.
inline double min_oracle_radius(const CouplingMatrix& K) { return 20.0 / std::sqrt(2.0 * K.min_eigenvalue()); }

namespace detail {

// Conservative second-order discretisation of reg'' + reg'/r on r_j = j h,
// with the symmetric closure 4 (reg_1 - reg_0)/h^2 at the origin.
struct RadialSystem {
  const CouplingMatrix& K;
  int n[2];
  int M;
  double h;
  double outer[2];

  double weight(int species, int j) const {
    if (n[species] == 0) return 1.0;
    if (j == 0) return 0.0;
    return std::pow(j * h, 2 * n[species]);
  }

  double lap(const std::vector<double>& f, int j, double right) const {
    const double fr = j + 1 < M ? f[j + 1] : right;
    if (j == 0) return 4.0 * (fr - f[0]) / (h * h);
    const double rp = (j + 0.5) * h, rm = (j - 0.5) * h, rj = j * h;
    return (rp * (fr - f[j]) - rm * (f[j] - f[j - 1])) / (rj * h * h);
  }

  void residual(const std::vector<double>& a, const std::vector<double>& b, std::vector<double>& Fa,
                std::vector<double>& Fb) const {
    for (int j = 0; j < M; ++j) {
      const double e1 = weight(0, j) * std::exp(a[j]);
      const double e2 = weight(1, j) * std::exp(b[j]);
      Fa[j] = lap(a, j, outer[0]) - 4.0 * (K.k11 * e1 + K.k12 * e2 - 1.0);
      Fb[j] = lap(b, j, outer[1]) - 4.0 * (K.k21 * e1 + K.k22 * e2 - 1.0);
    }
  }

  Eigen::SparseMatrix<double> jacobian(const std::vector<double>& a, const std::vector<double>& b) const {
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(static_cast<std::size_t>(M) * 8);
    for (int s = 0; s < 2; ++s) {
      const int off = s * M;
      for (int j = 0; j < M; ++j) {
        if (j == 0) {
          t.emplace_back(off, off, -4.0 / (h * h));
          t.emplace_back(off, off + 1, 4.0 / (h * h));
          continue;
        }
        const double rp = (j + 0.5) * h, rm = (j - 0.5) * h, rj = j * h;
        t.emplace_back(off + j, off + j, -(rp + rm) / (rj * h * h));
        t.emplace_back(off + j, off + j - 1, rm / (rj * h * h));
        if (j + 1 < M) t.emplace_back(off + j, off + j + 1, rp / (rj * h * h));
      }
    }
    for (int j = 0; j < M; ++j) {
      const double e1 = weight(0, j) * std::exp(a[j]);
      const double e2 = weight(1, j) * std::exp(b[j]);
      t.emplace_back(j, j, -4.0 * K.k11 * e1);
      t.emplace_back(j, M + j, -4.0 * K.k12 * e2);
      t.emplace_back(M + j, j, -4.0 * K.k21 * e1);
      t.emplace_back(M + j, M + j, -4.0 * K.k22 * e2);
    }
    Eigen::SparseMatrix<double> J(2 * M, 2 * M);
    J.setFromTriplets(t.begin(), t.end());
    return J;
  }
};

inline double inf_norm(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  for (double v : b) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace detail

/// Solves u_i'' + u_i'/r = 4 (k_i1 e^{u1} + k_i2 e^{u2} - 1) on (0, Rmax) with
/// u_i ~ 2 n_i ln r at the origin and u_i(Rmax) = -ln 2, by damped Newton on
/// the regular parts over a uniform mesh of `mesh` intervals.
inline RadialProfile radial_oracle(const CouplingMatrix& K, int n1, int n2, double Rmax, int mesh,
                                   double tol = 1e-10, int max_iter = 100) {
  if (n1 < 0 || n2 < 0) throw Error(ErrorCode::InvalidVortex, "vortex numbers must be non-negative");
  if (mesh < 4) throw Error(ErrorCode::InvalidGrid, "radial mesh needs at least 4 intervals");
  if (!(Rmax >= min_oracle_radius(K) * (1.0 - 1e-12))) {
    throw Error(ErrorCode::InvalidGrid, "Rmax must be at least 20/sqrt(2 min lambda)");
  }
  const double ln2 = std::numbers::ln2;
  const double h = Rmax / mesh;
  const int M = mesh;  // unknowns at j = 0..mesh-1; j = mesh is the boundary
  detail::RadialSystem sys{K, {n1, n2}, M, h, {-ln2 - 2.0 * n1 * std::log(Rmax), -ln2 - 2.0 * n2 * std::log(Rmax)}};

  std::vector<double> a(M), b(M);
  for (int j = 0; j < M; ++j) {
    const double r = j * h;
    a[j] = -ln2 - n1 * std::log1p(r * r);
    b[j] = -ln2 - n2 * std::log1p(r * r);
  }
  std::vector<double> Fa(M), Fb(M);
  sys.residual(a, b, Fa, Fb);
  double res = detail::inf_norm(Fa, Fb);

  int it = 0;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  while (res > tol) {
    if (it >= max_iter) {
      throw Error(ErrorCode::ConvergenceFailure, "radial Newton stalled at residual " + std::to_string(res));
    }
    ++it;
    const auto J = sys.jacobian(a, b);
    lu.compute(J);
    if (lu.info() != Eigen::Success) throw Error(ErrorCode::ConvergenceFailure, "radial Jacobian is singular");
    Eigen::VectorXd rhs(2 * M);
    for (int j = 0; j < M; ++j) {
      rhs[j] = -Fa[j];
      rhs[M + j] = -Fb[j];
    }
    const Eigen::VectorXd d = lu.solve(rhs);
    if (d.lpNorm<Eigen::Infinity>() < 1e-13) {
      // residual is at the round-off floor of the 1/h^2 scaled operator
      for (int j = 0; j < M; ++j) {
        a[j] += d[j];
        b[j] += d[M + j];
      }
      sys.residual(a, b, Fa, Fb);
      res = detail::inf_norm(Fa, Fb);
      break;
    }
    double t = 1.0;
    for (;;) {
      std::vector<double> ta(M), tb(M), Ga(M), Gb(M);
      bool finite = true;
      for (int j = 0; j < M; ++j) {
        ta[j] = a[j] + t * d[j];
        tb[j] = b[j] + t * d[M + j];
        finite = finite && ta[j] < 700.0 && tb[j] < 700.0;
      }
      double tres = INFINITY;
      if (finite) {
        sys.residual(ta, tb, Ga, Gb);
        tres = detail::inf_norm(Ga, Gb);
      }
      if (tres < (1.0 - 1e-4 * t) * res || (tres <= res && tres < 1e3 * tol)) {
        a = std::move(ta);
        b = std::move(tb);
        Fa = std::move(Ga);
        Fb = std::move(Gb);
        res = tres;
        break;
      }
      t *= 0.5;
      if (t < 1e-12) throw Error(ErrorCode::ConvergenceFailure, "radial line search stalled");
    }
  }

  RadialProfile out;
  out.n1 = n1;
  out.n2 = n2;
  out.newton_iterations = it;
  out.residual = res;
  out.r.resize(M + 1);
  out.reg1.resize(M + 1);
  out.reg2.resize(M + 1);
  out.u1.resize(M + 1);
  out.u2.resize(M + 1);
  for (int j = 0; j <= M; ++j) {
    const double r = j * h;
    out.r[j] = r;
    out.reg1[j] = j < M ? a[j] : sys.outer[0];
    out.reg2[j] = j < M ? b[j] : sys.outer[1];
    auto full = [&](double reg, int n) {
      if (n == 0) return reg;
      return j == 0 ? kVortexLogSentinel : reg + 2.0 * n * std::log(r);
    };
    out.u1[j] = full(out.reg1[j], n1);
    out.u2[j] = full(out.reg2[j], n2);
  }
  return out;
}

/// 2 pi int_0^Rmax (k_i1 e^{u1} + k_i2 e^{u2} - 1) r dr by the trapezoid rule.
inline std::pair<double, double> radial_flux(const CouplingMatrix& K, const RadialProfile& prof) {
  std::vector<double> f1(prof.r.size()), f2(prof.r.size());
  const double h = prof.r[1] - prof.r[0];
  for (std::size_t j = 0; j < prof.r.size(); ++j) {
    const double r = prof.r[j];
    const double e1 = (prof.n1 > 0 && j == 0) ? 0.0 : std::exp(prof.u1[j]);
    const double e2 = (prof.n2 > 0 && j == 0) ? 0.0 : std::exp(prof.u2[j]);
    const double w = (j == 0 || j + 1 == prof.r.size()) ? 0.5 : 1.0;
    f1[j] = w * (K.k11 * e1 + K.k12 * e2 - 1.0) * r;
    f2[j] = w * (K.k21 * e1 + K.k22 * e2 - 1.0) * r;
  }
  const double s = 2.0 * std::numbers::pi * h;
  return {s * pairwise_sum(f1), s * pairwise_sum(f2)};
}

}  // namespace vortexlab
