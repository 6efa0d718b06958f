#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "vortexlab/discretization.hpp"

using namespace vortexlab;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;

}  // namespace

TEST_CASE("grid construction", "[discretization]") {
  const auto g = Grid2D::periodic(2.0, 3.0, 8, 16);
  CHECK(g.hx == 0.25);
  CHECK(g.hy == 3.0 / 16);
  CHECK(g.x(0) == 0.0);
  CHECK(g.index(3, 2) == 2 * 8 + 3);
  CHECK_THROWS_AS(Grid2D::periodic(1.0, 1.0, 12, 16), Error);
  CHECK_THROWS_AS(Grid2D::periodic(0.0, 1.0, 16, 16), Error);

  const auto d = Grid2D::dirichlet_square(2.0, 5);
  CHECK(d.hx == 1.0);
  CHECK(d.x(0) == -2.0);
  CHECK(d.x(4) == 2.0);
  CHECK(d.on_ring(0, 2));
  CHECK_FALSE(d.on_ring(2, 2));
}

TEST_CASE("scalar fields reject non-finite values", "[discretization]") {
  const auto g = Grid2D::periodic(1.0, 1.0, 4, 4);
  CHECK_THROWS_AS(ScalarField(g, std::nan("")), Error);
  std::vector<double> v(16, 0.0);
  v[3] = INFINITY;
  CHECK_THROWS_AS(ScalarField(g, v), Error);
  CHECK_THROWS_AS(ScalarField(g, std::vector<double>(15, 0.0)), Error);
}

TEST_CASE("laplacian of a constant vanishes", "[discretization]") {
  const auto t = Grid2D::periodic(3.0, 2.0, 16, 8);
  CHECK(max_abs(apply_laplacian(ScalarField(t, 4.2))) < 1e-12);
  const auto d = Grid2D::dirichlet_square(1.0, 9);
  CHECK(max_abs(apply_laplacian(ScalarField(d, 4.2))) < 1e-12);
}

TEST_CASE("spectral laplacian of a Fourier mode", "[discretization]") {
  const double L1 = 3.0;
  const auto g = Grid2D::periodic(L1, 2.0, 32, 16);
  const auto f = ScalarField::sample(g, [&](double x, double) { return std::sin(2 * pi * x / L1); });
  const auto lap = apply_laplacian(f);
  const double k2 = std::pow(2 * pi / L1, 2);
  for (std::size_t k = 0; k < f.size(); ++k) CHECK(std::abs(lap[k] + k2 * f[k]) < 1e-12);
}

TEST_CASE("stencil is exact on quadratics", "[discretization]") {
  const auto g = Grid2D::dirichlet_square(1.5, 11);
  const auto f = ScalarField::sample(g, [](double x, double y) { return x * x + y * y; });
  const auto lap = apply_laplacian(f);
  for (int j = 1; j < g.ny - 1; ++j) {
    for (int i = 1; i < g.nx - 1; ++i) CHECK(lap.at(i, j) == Approx(4.0).epsilon(1e-12));
  }
  CHECK(lap.at(0, 3) == 0.0);
}

TEST_CASE("quadrature", "[discretization]") {
  const auto g = Grid2D::periodic(2.0, 3.5, 16, 32);
  CHECK(integrate(ScalarField(g, 1.0)) == Approx(7.0).epsilon(1e-15));
  const auto s = ScalarField::sample(g, [](double x, double) { return std::sin(2 * pi * x / 2.0); });
  CHECK(std::abs(integrate(s)) < 1e-14);
}

TEST_CASE("shifted inverse", "[discretization]") {
  const auto g = Grid2D::periodic(2.0, 1.0, 16, 8);
  CHECK(max_abs(poisson_precondition(ScalarField(g), ScalarField(g), 2.0).first) == 0.0);
  CHECK_THROWS_AS(poisson_precondition(ScalarField(g), ScalarField(g), 0.0), Error);

  const auto mode = ScalarField::sample(g, [](double x, double y) { return std::cos(2 * pi * (x / 2.0 + 2 * y)); });
  const double k2 = std::pow(2 * pi / 2.0, 2) + std::pow(4 * pi, 2);
  const auto out = poisson_precondition(mode, mode, 3.0).first;
  for (std::size_t k = 0; k < out.size(); ++k) CHECK(std::abs(out[k] - mode[k] / (3.0 + k2)) < 1e-14);
}

TEST_CASE("shifted inverse round trip", "[discretization][property]") {
  vltest::Gen gen(21);
  for (int t = 0; t < 20; ++t) {
    const bool periodic = gen.coin();
    const auto g = periodic ? Grid2D::periodic(gen.uniform(1, 8), gen.uniform(1, 8), 1 << gen.integer(2, 6),
                                               1 << gen.integer(2, 6))
                            : Grid2D::dirichlet_square(gen.uniform(1, 8), gen.integer(4, 40));
    const double shift = gen.uniform(0.1, 10);
    const auto r = periodic ? gen.field(g) : gen.interior_field(g);
    const auto x = laplacian_for(g).solve_shifted(r, shift);
    const auto lap = apply_laplacian(x);
    double err = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) err = std::max(err, std::abs(shift * x[k] - lap[k] - r[k]));
    CHECK(err < 1e-10);
  }
}

TEST_CASE("discrete integration by parts on the torus", "[discretization][property]") {
  vltest::Gen gen(22);
  for (int t = 0; t < 20; ++t) {
    const auto g = Grid2D::periodic(gen.uniform(1, 6), gen.uniform(1, 6), 32, 32);
    const auto f = gen.band_limited(g, 4);
    const auto h = gen.band_limited(g, 4);
    const double a = inner(f, apply_laplacian(h));
    const double b = inner(h, apply_laplacian(f));
    CHECK(std::abs(a - b) <= 1e-11 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("dirichlet energy is consistent with the laplacian", "[discretization][property]") {
  vltest::Gen gen(23);
  for (int t = 0; t < 20; ++t) {
    const bool periodic = gen.coin();
    const auto g = periodic ? Grid2D::periodic(gen.uniform(1, 6), gen.uniform(1, 6), 16, 8)
                            : Grid2D::dirichlet_square(gen.uniform(1, 6), gen.integer(4, 20));
    const auto& op = laplacian_for(g);
    const auto f = gen.field(g);
    const auto d = periodic ? gen.field(g) : gen.interior_field(g);
    const double eps = 1e-6;
    ScalarField fp = f, fm = f;
    for (std::size_t k = 0; k < f.size(); ++k) {
      fp[k] += eps * d[k];
      fm[k] -= eps * d[k];
    }
    const double fd = (op.dirichlet_energy(fp) - op.dirichlet_energy(fm)) / (2 * eps);
    const double exact = -inner(op.apply(f), d);
    CHECK(std::abs(fd - exact) <= 1e-6 * std::max(1.0, std::abs(exact)));
  }
}

TEST_CASE("stencil converges to the spectral laplacian at second order", "[discretization][property]") {
  // Smooth periodic field on [-R,R]^2 sampled on nested Dirichlet grids; compare
  // interior stencil values with the exact Laplacian.
  const double R = 1.0;
  auto f = [](double x, double y) { return std::sin(pi * x) * std::cos(pi * y) + std::sin(2 * pi * y); };
  auto lap = [](double x, double y) {
    return -2 * pi * pi * std::sin(pi * x) * std::cos(pi * y) - 4 * pi * pi * std::sin(2 * pi * y);
  };
  std::vector<double> errs;
  for (int n : {17, 33, 65}) {
    const auto g = Grid2D::dirichlet_square(R, n);
    const auto out = apply_laplacian(ScalarField::sample(g, f));
    double e = 0.0;
    for (int j = 1; j < n - 1; ++j) {
      for (int i = 1; i < n - 1; ++i) e = std::max(e, std::abs(out.at(i, j) - lap(g.x(i), g.y(j))));
    }
    errs.push_back(e);
  }
  for (std::size_t k = 1; k < errs.size(); ++k) {
    const double order = std::log2(errs[k - 1] / errs[k]);
    CHECK(order >= 1.8);
    CHECK(order <= 2.2);
  }
}

TEST_CASE("pairwise sums are order-fixed", "[discretization]") {
  std::vector<double> v(1000);
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = 1.0 / (1.0 + k);
  const double a = pairwise_sum(v);
  const double b = pairwise_sum(v);
  CHECK(a == b);
  CHECK(a == Approx(7.4854708605503451).epsilon(1e-14));
}
