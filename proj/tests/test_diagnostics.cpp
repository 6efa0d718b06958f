#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "support.hpp"
#include "vortexlab/diagnostics.hpp"

using namespace vortexlab;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double ln2 = std::numbers::ln2;

SolveConfig plane(int n, VortexSet vs, double R, double p = 1.0, double q = 2.0) {
  SolveConfig cfg;
  cfg.K = coupling_from_pq(p, q);
  cfg.vortices = std::move(vs);
  cfg.domain = DomainSpec::plane(R);
  cfg.grid = Grid2D::dirichlet_square(R, n);
  cfg.mu = default_mu(cfg.vortices);
  return cfg;
}

SolveConfig torus(int n, VortexSet vs, double L) {
  SolveConfig cfg;
  cfg.K = coupling_from_pq(1.0, 2.0);
  cfg.vortices = std::move(vs);
  cfg.domain = DomainSpec::torus(L, L);
  cfg.grid = Grid2D::periodic(L, L, n, n);
  return cfg;
}

const VortexSet kTorus21{{{1.0, 1.0, 1}, {4.0, 3.5, 1}}, {{2.5, 5.0, 1}}};

// Minimal Solution built from prescribed u fields.
Solution from_u(const ScalarField& u1, const ScalarField& u2) {
  Solution s;
  s.u1 = u1;
  s.u2 = u2;
  s.amp1 = ScalarField(u1.grid());
  s.amp2 = ScalarField(u1.grid());
  for (std::size_t k = 0; k < u1.size(); ++k) {
    s.amp1[k] = std::exp(u1[k]);
    s.amp2[k] = std::exp(u2[k]);
  }
  return s;
}

}  // namespace

TEST_CASE("vacuum diagnostics", "[diagnostics]") {
  const auto cfg = plane(64, {}, 9.0);
  const auto bg = make_background(cfg);
  const auto sol = newton_solve(cfg, bg);
  const auto f = flux_report(sol, cfg.K);
  CHECK(std::abs(f.flux1) < 1e-12);
  CHECK(std::abs(f.flux2) < 1e-12);
  CHECK(std::abs(energy_report(sol)) < 1e-12);
  CHECK(residual_norm(sol, cfg, bg) <= 1e-13);

  const PhysicalParams pp{1.0, 2.0, 0.7};
  const auto m = field_maps(sol, pp);
  for (std::size_t k = 0; k < m.B12.size(); ++k) {
    CHECK(std::abs(m.B12[k]) < 1e-12);
    CHECK(std::abs(m.B12_tilde[k] - 2.0 * (-2.0 * pp.q * pp.rho_bar * 0.5 + pp.q * pp.rho_bar)) < 1e-12);
    CHECK(std::abs(m.b0[k] - m.b0[0]) < 1e-12);
  }
  CHECK(m.b0[0] == Approx(pp.p * pp.rho_bar + pp.eB()).epsilon(1e-12));
}

TEST_CASE("torus identities for N = (2, 1)", "[diagnostics]") {
  const auto cfg = torus(128, kTorus21, 2 * pi);
  const auto bg = make_background(cfg);
  const auto sol = newton_solve(cfg, bg);
  const auto f = flux_report(sol, cfg.K);
  CHECK(f.flux1 == Approx(-2 * pi).epsilon(5e-3));
  CHECK(f.flux2 == Approx(-pi).epsilon(5e-3));
  CHECK(energy_report(sol) == Approx(-1.5 * pi).epsilon(5e-3));

  const auto adm = check_admissibility(cfg.K, 2, 1, cfg.domain.area());
  const auto [e1, e2] = eta_report(sol, cfg.domain);
  CHECK(e1 == Approx(adm.eta1).epsilon(5e-3));
  CHECK(e2 == Approx(adm.eta2).epsilon(5e-3));
  CHECK(residual_norm(sol, cfg, bg) <= 1e-8);
  CHECK_THROWS_AS(decay_fit(sol, cfg.domain), Error);
}

TEST_CASE("plane single vortex", "[diagnostics]") {
  const auto cfg = plane(128, VortexSet{{{0.0, 0.0, 1}}, {}}, 9.0);
  const auto bg = make_background(cfg);
  const auto sol = newton_solve(cfg, bg);
  const auto f = flux_report(sol, cfg.K);
  CHECK(f.flux1 == Approx(-pi).epsilon(1e-3));
  CHECK(std::abs(f.flux2) < 1e-3);
  CHECK(residual_norm(sol, cfg, bg) <= 1e-8);

  const PhysicalParams pp{1.0, 2.0, 0.5};
  const auto m = field_maps(sol, pp);
  CHECK(integrate(m.B12) == Approx(pp.eB() * f.flux1).epsilon(1e-12));

  const auto d = diagnose(sol, cfg, bg, pp);
  REQUIRE(d.decay.has_value());
  CHECK(d.decay->rate >= d.decay_bound);
  CHECK(d.decay->gradient_rate >= d.decay_bound);
  CHECK(d.decay->r2 > 0.95);  // the algebraic prefactor bends the log-linear fit slightly
  CHECK(d.decay_bound == Approx(0.8 * std::sqrt(8.0)));
}

TEST_CASE("B12 at a vortex node", "[diagnostics]") {
  const auto cfg = plane(65, VortexSet{{{0.0, 0.0, 1}}, {}}, 6.0);
  const auto sol = newton_solve(cfg, make_background(cfg));
  const PhysicalParams pp{1.0, 2.0, 1.0};
  const auto m = field_maps(sol, pp);
  const double b = sol.amp2.at(32, 32);
  CHECK(m.psi_up_sq.at(32, 32) == 0.0);
  CHECK(m.B12.at(32, 32) == Approx(2.0 * (pp.p - pp.q) * b - pp.eB()).epsilon(1e-14));
}

TEST_CASE("residual sees perturbations", "[diagnostics]") {
  vltest::Gen gen(7);
  const auto cfg = plane(64, VortexSet{{{0.3, 0.1, 1}}, {{-0.4, 0.2, 1}}}, 8.0);
  const auto bg = make_background(cfg);
  const auto sol = newton_solve(cfg, bg);
  CHECK(residual_norm(sol, cfg, bg) <= 1e-8);
  State s = sol.state;
  const auto noise = gen.interior_field(cfg.grid, 1e-3);
  for (std::size_t k = 0; k < noise.size(); ++k) s.w1[k] += noise[k];
  CHECK(residual_norm(recover_solution(s, cfg, bg), cfg, bg) >= 1e-4);
}

TEST_CASE("decay fit recovers a synthetic rate", "[diagnostics]") {
  const double R = 10.0;
  const Grid2D g = Grid2D::dirichlet_square(R, 201);
  const auto u1 = ScalarField::sample(g, [](double x, double y) { return -ln2 + std::exp(-1.5 * std::hypot(x, y)); });
  const auto u2 = ScalarField::sample(g, [](double, double) { return -ln2; });
  const auto fit = decay_fit(from_u(u1, u2), DomainSpec::plane(R));
  CHECK(fit.rate == Approx(3.0).margin(1e-3));
  CHECK(fit.r2 > 0.9999);
}

TEST_CASE("least squares on exact lines", "[diagnostics]") {
  const std::vector<double> x{0, 1, 2, 3, 4};
  std::vector<double> y;
  for (double v : x) y.push_back(2.5 - 0.75 * v);
  const auto f = least_squares(x, y);
  CHECK(f.slope == Approx(-0.75).epsilon(1e-14));
  CHECK(f.intercept == Approx(2.5).epsilon(1e-14));
  CHECK(f.r2 == Approx(1.0).epsilon(1e-14));
}

TEST_CASE("flux error shrinks under refinement", "[diagnostics]") {
  double prev = 1e300;
  for (int n : {64, 128, 256}) {
    const auto cfg = plane(n, VortexSet{{{0.0, 0.0, 1}}, {}}, 9.0);
    const auto sol = newton_solve(cfg, make_background(cfg));
    const double err = std::abs(flux_report(sol, cfg.K).flux1 + pi);
    CHECK(err < prev);
    prev = err;
  }
}

TEST_CASE("short truncation radius is reported, not fitted", "[diagnostics]") {
  const auto cfg = plane(48, VortexSet{{{0.0, 0.0, 2}}, {}}, 2.5);
  const auto bg = make_background(cfg);
  const auto sol = newton_solve(cfg, bg);
  try {
    decay_fit(sol, cfg.domain);
    FAIL("expected InsufficientDecayWindow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InsufficientDecayWindow);
  }
  const auto d = diagnose(sol, cfg, bg, PhysicalParams{});
  CHECK_FALSE(d.decay.has_value());
  REQUIRE(d.decay_error.has_value());
  CHECK(d.decay_error->code() == ErrorCode::InsufficientDecayWindow);
}

TEST_CASE("oracle comparison needs centred vortices", "[diagnostics]") {
  CHECK(radial_multiplicities(VortexSet{{{0.0, 0.0, 2}}, {{0.0, 0.0, 1}}}) == std::pair{2, 1});
  try {
    radial_multiplicities(VortexSet{{{0.5, 0.0, 1}}, {}});
    FAIL("expected NotRadiallyReducible");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NotRadiallyReducible);
  }
}

TEST_CASE("plane solve agrees with the radial oracle", "[diagnostics]") {
  const auto cfg = plane(128, VortexSet{{{0.0, 0.0, 1}}, {}}, 10.0);
  const auto sol = newton_solve(cfg, make_background(cfg));
  const auto prof = radial_oracle(cfg.K, 1, 0, 10.0, 20000);
  const auto c = compare_with_oracle(sol, cfg.domain, prof);
  CHECK(c.rings > 10);
  CHECK(c.max_ring_diff < 5e-3);  // tightens to 1e-3 at 256^2
  CHECK(c.mean_ring_diff <= c.max_ring_diff);
}

TEST_CASE("radial profile rows", "[diagnostics]") {
  const auto cfg = plane(64, VortexSet{{{0.0, 0.0, 1}}, {}}, 8.0);
  const auto sol = newton_solve(cfg, make_background(cfg));
  const auto rows = radial_profile(sol, cfg.domain);
  REQUIRE(rows.size() > 20);
  for (std::size_t k = 1; k < rows.size(); ++k) CHECK(rows[k].r > rows[k - 1].r);
  CHECK(rows.back().u1 == Approx(-ln2).margin(1e-4));
  CHECK(rows.front().u1 < rows.back().u1);
}
