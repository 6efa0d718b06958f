#pragma once

// Shared fixtures and hand-rolled generators for the property tests.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "vortexlab/field.hpp"
#include "vortexlab/model.hpp"

namespace vltest {

using namespace vortexlab;

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  bool coin() { return integer(0, 1) == 1; }

  ScalarField field(const Grid2D& g, double amp = 1.0) {
    ScalarField f(g);
    for (std::size_t k = 0; k < f.size(); ++k) f[k] = uniform(-amp, amp);
    return f;
  }

  /// Random field that vanishes on the Dirichlet ring (an admissible direction).
  ScalarField interior_field(const Grid2D& g, double amp = 1.0) {
    ScalarField f = field(g, amp);
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        if (g.on_ring(i, j)) f.at(i, j) = 0.0;
      }
    }
    return f;
  }

  /// Trigonometric polynomial with modes |m|,|n| <= kmax on a periodic cell.
  ScalarField band_limited(const Grid2D& g, int kmax) {
    const double L1 = g.nx * g.hx, L2 = g.ny * g.hy;
    struct Mode {
      int m, n;
      double a, b;
    };
    std::vector<Mode> modes;
    for (int m = -kmax; m <= kmax; ++m) {
      for (int n = -kmax; n <= kmax; ++n) modes.push_back({m, n, uniform(-1, 1), uniform(-1, 1)});
    }
    return ScalarField::sample(g, [&](double x, double y) {
      double s = 0.0;
      for (const auto& md : modes) {
        const double ph = 2.0 * std::numbers::pi * (md.m * x / L1 + md.n * y / L2);
        s += md.a * std::cos(ph) + md.b * std::sin(ph);
      }
      return s;
    });
  }

  /// (p, q) with p > 0, q > 0, p != q.
  std::pair<double, double> couplings() {
    for (;;) {
      const double p = uniform(0.2, 5.0);
      const double q = uniform(0.2, 5.0);
      if (std::abs(p - q) > 1e-3) return {p, q};
    }
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

}  // namespace vltest
