#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vnsim/diagnostics.hpp"
#include "vnsim/reference.hpp"

using namespace vnsim;

TEST_CASE("energy report on hand-built states") {
  Grid g = Grid::make2d(1.0, 4.0, 8, 32);
  SECTION("empty state is all zeros") {
    ParticleEnsemble ens;
    ens.dim = 2;
    FluidState fl(g);
    EnergyTracker tr(0.5);
    const EnergyReport r = tr.add(ens, fl);
    CHECK(r.kinetic == 0.0);
    CHECK(r.potential == 0.0);
    CHECK(r.dissipation == 0.0);
    CHECK(r.inequality_residual == 0.0);
  }
  SECTION("one particle, direct evaluation") {
    ParticleEnsemble ens;
    ens.dim = 2;
    ens.x = {vec2(0.5, 3.0)};
    ens.v = {vec2(2.0, 0.0)};  // |v| = 2
    ens.weight = {1.0};
    ens.alive = {1};
    ens.initial_mass = 1.0;
    FluidState fl(g);
    EnergyTracker tr(0.5);
    const EnergyReport r = tr.add(ens, fl);
    CHECK(r.kinetic == Catch::Approx(1.0));    // (eps/2) w |v|^2 = 0.25 * 4
    CHECK(r.potential == Catch::Approx(3.0));  // w z
    CHECK(r.dissipation == Catch::Approx(4.0));
    CHECK(r.total == Catch::Approx(4.0));
  }
}

TEST_CASE("energy tracker accumulates the dissipation integral") {
  Grid g = Grid::make2d(1.0, 2.0, 8, 16);
  ParticleEnsemble ens;
  ens.dim = 2;
  ens.x = {vec2(0.5, 1.0)};
  ens.v = {vec2(1.0, 0.0)};
  ens.weight = {1.0};
  ens.alive = {1};
  FluidState fl(g);
  EnergyTracker tr(1.0);
  tr.add(ens, fl);
  fl.t = 2.0;  // constant D = 1 over [0,2]
  const EnergyReport r = tr.add(ens, fl);
  CHECK(r.cumulative_dissipation == Catch::Approx(2.0));
  CHECK(r.inequality_residual == Catch::Approx(2.0));  // nothing decayed in this frozen setup
}

TEST_CASE("delta star solves its defining equation") {
  const double d = delta_star();
  CHECK(std::abs(d * std::exp(d) - 1.0 / 9.0) < 1e-12);
  CHECK(d == Catch::Approx(0.1).margin(0.02));
}

TEST_CASE("monitors") {
  Grid g = Grid::make2d(1.0, 1.0, 8, 8);
  SECTION("zero history leaves only the initial H1 part") {
    VectorField u0(g);
    MonitorTracker tr(u0);
    tr.add(0.0, u0, 0.0);
    const MonitorReport r = tr.add(1.0, u0, 0.0);
    CHECK(r.nabla_u_L1Linf == 0.0);
    CHECK(r.u_L1Linf == 0.0);
    CHECK(r.upsilon == 0.0);
    CHECK(r.change_of_variable_regime);
  }
  SECTION("constant gradient integrates to c*T") {
    VectorField u(g);
    for (int k = 0; k < g.nz; ++k)
      for (int i = 0; i < g.nx; ++i) u.u(i, 0, k) = (k + 0.5) * g.hz;  // du/dz = 1
    MonitorTracker tr(u);
    tr.add(0.0, u, 0.0);
    const MonitorReport r = tr.add(3.0, u, 0.0);
    // wall ghost doubles the lowest-layer derivative: |grad|_inf = 2 there
    CHECK(r.nabla_u_L1Linf == Catch::Approx(3.0 * grad_max_norm(u)));
    CHECK(r.u_L1Linf == Catch::Approx(3.0 * u.max_abs()));
  }
}

TEST_CASE("negative norm basics") {
  Grid g = Grid::make2d(1.0, 1.0, 16, 16);
  SECTION("zero field") {
    CHECK(hminus1_norm(ScalarField(g)) == 0.0);
  }
  SECTION("bounded by the L2 norm and homogeneous") {
    ScalarField f(g);
    std::mt19937_64 eng(5);
    for (double& v : f.values) v = static_cast<double>(eng() >> 11) * 0x1p-53 - 0.5;
    const double h = hminus1_norm(f);
    CHECK(h <= f.l2_norm() * (1.0 + 1e-12));
    ScalarField f3 = f;
    for (double& v : f3.values) v *= 3.0;
    CHECK(hminus1_norm(f3) == Catch::Approx(3.0 * h).epsilon(1e-12));
  }
  SECTION("eigenmode identity") {
    CHECK(hminus1_eigenmode_error() < 1e-10);
  }
}

TEST_CASE("decay fit") {
  std::vector<double> ts, vs;
  for (int i = 0; i <= 40; ++i) {
    const double t = 0.5 * i;
    ts.push_back(t);
    vs.push_back(2.7 * std::pow(1.0 + t, -1.5));
  }
  CHECK(decay_fit(ts, vs, 0.0, 20.0) == Catch::Approx(-1.5).margin(1e-6));
  SECTION("constant series has zero slope") {
    std::vector<double> cs(ts.size(), 4.2);
    CHECK(decay_fit(ts, cs, 0.0, 20.0) == Catch::Approx(0.0).margin(1e-12));
  }
  SECTION("scale invariance") {
    std::vector<double> scaled = vs;
    for (double& v : scaled) v *= 17.0;
    CHECK(decay_fit(ts, scaled, 1.0, 15.0) ==
          Catch::Approx(decay_fit(ts, vs, 1.0, 15.0)).margin(1e-12));
  }
  SECTION("input validation") {
    CHECK_THROWS_AS(decay_fit(ts, vs, 19.0, 20.0), std::invalid_argument);  // too few samples
    std::vector<double> bad = vs;
    bad[5] = 0.0;
    CHECK_THROWS_AS(decay_fit(ts, bad, 0.0, 20.0), std::invalid_argument);
  }
}

TEST_CASE("log-log slope fitter") {
  std::vector<double> eps{0.4, 0.2, 0.1, 0.05}, err;
  for (double e : eps) err.push_back(std::sqrt(e));
  CHECK(loglog_slope(eps, err) == Catch::Approx(0.5).margin(1e-6));
  CHECK_THROWS_AS(loglog_slope({1.0}, {1.0}), std::invalid_argument);
}

TEST_CASE("convergence report self-comparison is zero") {
  Grid g = Grid::make2d(1.0, 1.0, 8, 8);
  SnapshotSeries s;
  s.times = {0.0, 0.5, 1.0};
  for (int i = 0; i < 3; ++i) {
    VectorField u(g);
    u.u(2, 0, 3) = 0.5 * i;
    s.u.push_back(u);
    ScalarField r(g);
    r.at(1, 0, 1) = 1.0 + i;
    s.rho.push_back(r);
  }
  std::vector<std::pair<double, SnapshotSeries>> runs;
  runs.emplace_back(0.1, s);
  runs.emplace_back(0.05, s);
  const ConvergenceReport rep = convergence_report(runs, s);
  for (const auto& row : rep.rows) {
    CHECK(row.u_err_L2 == 0.0);
    CHECK(row.rho_err_Hm1 == 0.0);
  }
  CHECK(std::isnan(rep.slope));  // only two rows, and zero errors anyway

  SECTION("mismatched times rejected") {
    SnapshotSeries bad = s;
    bad.times[1] = 0.6;
    std::vector<std::pair<double, SnapshotSeries>> broken;
    broken.emplace_back(0.1, bad);
    CHECK_THROWS_AS(convergence_report(broken, s), std::invalid_argument);
  }
}
