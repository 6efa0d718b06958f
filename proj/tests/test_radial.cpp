#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "vortexlab/radial.hpp"

using namespace vortexlab;
using Catch::Approx;

namespace {

constexpr double pi = std::numbers::pi;
constexpr double ln2 = std::numbers::ln2;

}  // namespace

TEST_CASE("radial vacuum is -ln 2 everywhere", "[radial]") {
  const auto K = coupling_from_pq(1.0, 2.0);
  const auto prof = radial_oracle(K, 0, 0, 10.0, 2000);
  CHECK(prof.newton_iterations == 0);
  for (std::size_t j = 0; j < prof.r.size(); ++j) {
    CHECK(prof.u1[j] == -ln2);
    CHECK(prof.u2[j] == -ln2);
  }
}

TEST_CASE("radial single vortex", "[radial]") {
  const auto K = coupling_from_pq(1.0, 2.0);
  const auto prof = radial_oracle(K, 1, 0, 10.0, 20000);

  SECTION("logarithmic core") {
    // u1 - 2 ln r tends to a constant at the origin
    const double a = prof.u_at(1, 1e-3) - 2 * std::log(1e-3);
    const double b = prof.u_at(1, 2e-3) - 2 * std::log(2e-3);
    CHECK(std::abs(a - b) < 1e-4);
    CHECK(prof.u1[0] == kVortexLogSentinel);
  }
  SECTION("monotone profiles approach -ln 2") {
    for (std::size_t j = 2; j < prof.r.size(); ++j) CHECK(prof.u1[j] >= prof.u1[j - 1]);
    CHECK(prof.u1.back() == Approx(-ln2).epsilon(1e-14));
    CHECK(prof.u2.back() == Approx(-ln2).epsilon(1e-14));
    CHECK(std::abs(prof.u_at(1, 6.0) + ln2) < 1e-5);
    CHECK(std::abs(prof.u_at(1, 8.0) + ln2) < 1e-6);
  }
  SECTION("flux identity") {
    const auto [f1, f2] = radial_flux(K, prof);
    CHECK(std::abs(f1 + pi) < 1e-3);
    CHECK(std::abs(f2) < 1e-3);
  }
  SECTION("regression values at r = 1") {
    // pinned from the verified build; mesh-converged to ~1e-8
    CHECK(prof.u_at(1, 1.0) == Approx(-0.94518226).margin(1e-6));
    CHECK(prof.u_at(2, 1.0) == Approx(-0.77251414).margin(1e-6));
  }
}

TEST_CASE("radial flux identity for mixed multiplicities", "[radial]") {
  for (auto [p, q] : {std::pair{1.0, 2.0}, std::pair{2.0, 1.0}, std::pair{1.0, 0.5}}) {
    const auto K = coupling_from_pq(p, q);
    for (auto [n1, n2] : {std::pair{2, 1}, std::pair{1, 1}, std::pair{0, 3}}) {
      const double R = std::max(12.0, min_oracle_radius(K));
      const auto prof = radial_oracle(K, n1, n2, R, 20000);
      const auto [f1, f2] = radial_flux(K, prof);
      CHECK(std::abs(f1 + pi * n1) < 1e-3);
      CHECK(std::abs(f2 + pi * n2) < 1e-3);
    }
  }
}

TEST_CASE("radial mesh refinement converges at second order", "[radial]") {
  const auto K = coupling_from_pq(1.0, 2.0);
  const double ref = radial_oracle(K, 1, 0, 10.0, 32000).u_at(1, 1.0);
  const double e1 = std::abs(radial_oracle(K, 1, 0, 10.0, 1000).u_at(1, 1.0) - ref);
  const double e2 = std::abs(radial_oracle(K, 1, 0, 10.0, 2000).u_at(1, 1.0) - ref);
  CHECK(std::log2(e1 / e2) > 1.7);
}

TEST_CASE("radial oracle preconditions", "[radial]") {
  const auto K = coupling_from_pq(1.0, 2.0);
  CHECK_THROWS_AS(radial_oracle(K, -1, 0, 10.0, 100), Error);
  CHECK_THROWS_AS(radial_oracle(K, 1, 0, 5.0, 100), Error);  // below 20/sqrt(2 min lambda) = 10
  CHECK_THROWS_AS(radial_oracle(K, 1, 0, 10.0, 2), Error);
}
