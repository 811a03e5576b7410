#include <catch2/catch_amalgamated.hpp>

#include "vnsim/characteristics.hpp"
#include "vnsim/reference.hpp"

using namespace vnsim;

TEST_CASE("free flow matches the push with zero field") {
  PhasePoint p;
  p.x = vec2(0.2, 1.5);
  p.v = vec2(0.3, -0.4);
  const double eps = 0.37, dt = 0.8;
  const PhasePoint a = free_flow(p, eps, dt, 2);
  const PhasePoint b = push_exponential(p, Vec{0.0, 0.0, 0.0}, eps, dt, 2);
  for (int c = 0; c < 2; ++c) {
    CHECK(a.x[c] == Catch::Approx(b.x[c]).margin(1e-15));
    CHECK(a.v[c] == Catch::Approx(b.v[c]).margin(1e-15));
  }
}

TEST_CASE("push is a semigroup in time") {
  PhasePoint p;
  p.x = vec2(0.0, 2.0);
  p.v = vec2(1.0, 0.5);
  const Vec u = vec2(0.1, -0.2);
  const double eps = 0.5;
  const PhasePoint one = push_exponential(p, u, eps, 0.7, 2);
  PhasePoint two = push_exponential(p, u, eps, 0.3, 2);
  two = push_exponential(two, u, eps, 0.4, 2);
  for (int c = 0; c < 2; ++c) {
    CHECK(one.x[c] == Catch::Approx(two.x[c]).margin(1e-14));
    CHECK(one.v[c] == Catch::Approx(two.v[c]).margin(1e-14));
  }
}

TEST_CASE("push agrees with the reference integrator across stiffness regimes") {
  CHECK(push_oracle_error() < 1e-10);
}

TEST_CASE("asymptotic-preserving limit of one push") {
  const double eps = 1e-8, dt = 0.1;
  PhasePoint p;
  p.x = vec2(0.0, 1.0);
  p.v = vec2(5.0, -3.0);
  const Vec u = vec2(0.3, 0.2);
  const PhasePoint q = push_exponential(p, u, eps, dt, 2);
  CHECK(std::abs(q.v[0] - u[0]) < 1e-7);
  CHECK(std::abs(q.v[1] - (u[1] - 1.0)) < 1e-7);
  CHECK(std::abs(q.x[0] - (p.x[0] + dt * u[0])) < 1e-7);
  CHECK(std::abs(q.x[1] - (p.x[1] + dt * (u[1] - 1.0))) < 1e-7);
}

TEST_CASE("velocity jacobian formula") {
  CHECK(velocity_jacobian(0.5, 0.5, 2) == Catch::Approx(std::exp(2.0)).epsilon(1e-14));
  CHECK(velocity_jacobian(0.25, 0.25, 3) == Catch::Approx(std::exp(3.0)).epsilon(1e-14));
  CHECK(std::isinf(velocity_jacobian(1e-6, 1.0, 3)));
  CHECK_THROWS_AS(velocity_jacobian(-1.0, 1.0, 2), std::invalid_argument);
}

TEST_CASE("free exit time") {
  SECTION("pinned value for z0=1, resting start, eps=0.5") {
    // Root of 1 + 0.5(1-e^{-2t}) - t = 0 computed to 1e-12 by an
    // independent evaluation of the same transcendental equation.
    const double t = exit_time_free(1.0, 0.0, 0.5);
    CHECK(t == Catch::Approx(1.4737654512711).margin(1e-10));
    CHECK(std::abs(free_height(1.0, 0.0, 0.5, t)) < 1e-11);
  }
  SECTION("strictly below the free horizon") {
    for (double eps : {0.5, 0.25, 0.1})
      for (double z0 : {0.1, 0.5, 0.99})
        for (double v : {-0.9, 0.0, 0.9}) {
          const double t = exit_time_free(z0, v, eps);
          CHECK(t < 1.0 + eps * (1.0 + 1.0));  // L = R = 1 horizon
          CHECK(t > 0.0);
        }
  }
  SECTION("monotone in the starting height") {
    double prev = 0.0;
    for (double z0 : {0.2, 0.4, 0.6, 0.8}) {
      const double t = exit_time_free(z0, 0.3, 0.4);
      CHECK(t > prev);
      prev = t;
    }
  }
  CHECK_THROWS_AS(exit_time_free(-1.0, 0.0, 0.5), std::invalid_argument);
}

TEST_CASE("enlargement functions") {
  // l(s) and r(s) at eps=0.5, L=R=1, s=4: direct evaluation of the closed
  // forms.
  const EgcBounds b = egc_bounds(0.5, 1.0, 1.0, 4.0);
  const double a = 1.0 - std::exp(-8.0);
  CHECK(b.l == Catch::Approx(0.5 * (4.0 - 0.5 * a) - 1.0).epsilon(1e-14));
  CHECK(b.r == Catch::Approx(0.5 * (4.0 / (0.5 * a) - 1.0) - 1.0).epsilon(1e-14));
  CHECK(b.l > 0.0);
  CHECK(b.r > 0.0);
  CHECK_THROWS_AS(egc_bounds(0.5, 1.0, 1.0, -1.0), std::invalid_argument);
}

TEST_CASE("transfer bound") {
  CHECK(egc_transfer_eps_bound(0.5) == Catch::Approx(0.25).epsilon(1e-15));
  CHECK(egc_transfer_eps_bound(1.0) == Catch::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(egc_transfer_eps_bound(0.0), std::invalid_argument);
}

TEST_CASE("exit condition for the trivial field") {
  EgcQuery q;
  q.L = 1.0;
  q.R = 1.0;
  q.eps = 0.5;
  q.samples = 9;
  q.dim = 2;

  SECTION("satisfied just past the free horizon") {
    q.T = 2.01;  // horizon L + eps(1+R) = 2
    const EgcResult r = egc_check(FieldSeries::zero_field(), q);
    CHECK(r.satisfied);
    CHECK(r.worst_exit_time < 2.0);
    CHECK(r.samples > 0);
  }
  SECTION("violated at T=1") {
    q.T = 1.0;
    const EgcResult r = egc_check(FieldSeries::zero_field(), q);
    CHECK_FALSE(r.satisfied);
  }
  SECTION("worst sample is reported consistently") {
    q.T = 2.01;
    const EgcResult r = egc_check(FieldSeries::zero_field(), q);
    const double direct = exit_time_free(r.worst_sample.x[1], r.worst_sample.v[1], q.eps);
    CHECK(r.worst_exit_time == Catch::Approx(direct).margin(1e-9));
  }
}

TEST_CASE("field series validation") {
  FieldSeries s;
  s.times = {0.0, 0.5};
  s.fields.resize(1);
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);
  s.fields.resize(2);
  CHECK_NOTHROW(s.validate(1.0));
  s.times = {0.5, 1.0};
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);  // must start at 0
  s.times = {0.0, 0.0};
  CHECK_THROWS_AS(s.validate(1.0), std::invalid_argument);  // strictly increasing
}
