#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "vnsim/fluid.hpp"
#include "vnsim/reference.hpp"

using namespace vnsim;

TEST_CASE("projection removes the discrete divergence") {
  Grid g = Grid::make2d(1.0, 1.0, 16, 16);
  FluidSolver solver(g);
  VectorField u(g);
  std::mt19937_64 eng(13);
  auto rnd = [&eng]() { return static_cast<double>(eng() >> 11) * 0x1p-53 - 0.5; };
  for (double& v : u.comp[0]) v = rnd();
  for (int k = 1; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i) u.w(i, 0, k) = rnd();
  solver.project(u);
  CHECK(solver.divergence(u).max_abs() < 1e-10);
  SECTION("projection is idempotent") {
    VectorField u2 = u;
    solver.project(u2);
    double diff = 0.0;
    for (int c = 0; c < 2; ++c)
      for (size_t i = 0; i < u.comp[c].size(); ++i)
        diff = std::max(diff, std::abs(u.comp[c][i] - u2.comp[c][i]));
    CHECK(diff < 1e-10);
  }
}

TEST_CASE("vortex initial field is discretely divergence free") {
  Grid g = Grid::make2d(2.0, 1.0, 24, 16);
  const VectorField u = vortex_field(g, 0.3);
  CHECK(discrete_div(u).max_abs() < 1e-12);
  // wall rows are pinned
  for (int i = 0; i < g.nx; ++i) {
    CHECK(u.w(i, 0, 0) == 0.0);
    CHECK(u.w(i, 0, g.nz) == 0.0);
  }
}

TEST_CASE("steady channel flow converges at second order") {
  const double order = channel_flow_order();
  CHECK(order > 1.8);
  CHECK(order < 2.2);
  CHECK(channel_flow_error(64) < channel_flow_error(16));
}

TEST_CASE("implicit diffusion reproduces the channel profile too") {
  Grid g = Grid::make2d(1.0, 1.0, 4, 32);
  FluidOptions opt;
  opt.implicit_diffusion = true;
  FluidSolver solver(g, opt);
  VectorField force(g);
  for (double& v : force.comp[0]) v = 1.0;
  FluidState st(g);
  // long implicit steps toward steady state (dt still inside the advective
  // CFL guard for the final profile, |u| <= 1/2)
  for (int s = 0; s < 400; ++s) st = solver.ns_step(st, force, 0.05);
  double err = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    const double z = (k + 0.5) * g.hz;
    err = std::max(err, std::abs(st.u.u(0, 0, k) - (z - 0.5 * z * z)));
  }
  CHECK(err < 5e-4);  // discretization error at h=1/32
}

TEST_CASE("periodic single-mode viscous decay matches the scheme amplification") {
  CHECK(stokes_mode_decay_error() < 1e-6);
}

TEST_CASE("skew-symmetric advection conserves energy on periodic modes") {
  Grid g = Grid::make2d(1.0, 1.0, 16, 16);
  FluidOptions opt;
  opt.periodic_z = true;
  FluidSolver solver(g, opt);
  // divergence-free periodic field from a streamfunction on the torus
  VectorField u(g);
  auto psi = [&](int i, int k) {
    return std::sin(2.0 * M_PI * i * g.hx) * std::cos(2.0 * M_PI * k * g.hz) +
           0.3 * std::sin(4.0 * M_PI * i * g.hx + 1.0) * std::sin(2.0 * M_PI * k * g.hz);
  };
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i) {
      u.u(i, 0, k) = (psi(i, k + 1) - psi(i, k)) / g.hz;
      u.w(i, 0, k) = -(psi(i + 1, k) - psi(i, k)) / g.hx;
    }
  solver.impose_walls(u);  // mirror row
  REQUIRE(solver.divergence(u).max_abs() < 1e-12);
  const VectorField adv = solver.advection(u);
  // <u, N(u)> with the same face weights as the energy
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    const size_t n = c == 1 ? u.comp[c].size() - g.nx : u.comp[c].size();  // skip mirror row
    for (size_t i = 0; i < n; ++i) s += u.comp[c][i] * adv.comp[c][i];
  }
  CHECK(std::abs(s) * g.cell_volume() < 1e-12);
}

TEST_CASE("CFL guard rejects oversized steps with a usable suggestion") {
  Grid g = Grid::make2d(1.0, 1.0, 16, 16);
  FluidSolver solver(g);
  FluidState st(g);
  VectorField f(g);
  const double too_big = 10.0 * solver.stable_dt(st.u);
  try {
    solver.ns_step(st, f, too_big);
    FAIL("expected StepRejected");
  } catch (const StepRejected& e) {
    CHECK(e.suggested_dt > 0.0);
    CHECK(e.suggested_dt < too_big);
    CHECK_NOTHROW(solver.ns_step(st, f, 0.9 * e.suggested_dt));
  }
}

TEST_CASE("transport remap translates exactly and keeps the ledger") {
  CHECK(translation_error(3) < 1e-12);

  Grid g = Grid::make2d(1.0, 1.0, 16, 32);
  FluidSolver solver(g);
  InitialKineticSpec spec;
  spec.center = vec2(0.5, 0.5);
  spec.half_width = vec2(0.2, 0.3);
  LimitState st(g);
  st.rho = blob_density(g, spec);
  st.initial_mass = st.rho.integral();
  const double dt = 0.5 * solver.stable_dt(st.fluid.u);
  double absorbed_prev = 0.0;
  for (int s = 0; s < 120; ++s) {
    st = solver.limit_step(st, dt);
    CHECK(std::abs(st.ledger_defect()) < 1e-12 * st.initial_mass);
    CHECK(st.absorbed_mass >= absorbed_prev);
    absorbed_prev = st.absorbed_mass;
    for (double v : st.rho.values) CHECK(v >= 0.0);
  }

  // Large transport step: everything below z = dt is absorbed, ledger exact.
  double absorbed = 0.0, truncated = 0.0;
  VectorField zero(g);
  const ScalarField moved = solver.transport_density(st.rho, zero, 0.4, absorbed, truncated);
  CHECK(absorbed > 0.0);
  CHECK(moved.integral() + absorbed + truncated ==
        Catch::Approx(st.rho.integral()).epsilon(1e-12));
}

TEST_CASE("limit fluid reacts to the density load") {
  Grid g = Grid::make2d(1.0, 1.0, 16, 16);
  FluidSolver solver(g);
  InitialKineticSpec spec;
  spec.center = vec2(0.3, 0.6);
  spec.half_width = vec2(0.15, 0.15);
  LimitState st(g);
  st.rho = blob_density(g, spec);
  st.initial_mass = st.rho.integral();
  const double dt = 0.5 * solver.stable_dt(st.fluid.u);
  for (int s = 0; s < 10; ++s) st = solver.limit_step(st, dt);
  CHECK(st.fluid.u.l2_norm_sq() > 0.0);  // buoyancy-type forcing spun up a flow
  CHECK(solver.divergence(st.fluid.u).max_abs() < 1e-9);
}

TEST_CASE("upwind advection option runs and transports the profile") {
  Grid g = Grid::make2d(1.0, 1.0, 32, 32);
  FluidOptions opt;
  opt.advection = AdvectionScheme::upwind2;
  FluidSolver solver(g, opt);
  FluidState st(g);
  st.u = vortex_field(g, 0.2);
  solver.project(st.u);
  const double e0 = st.u.l2_norm_sq();
  const double dt = 0.5 * solver.stable_dt(st.u);
  VectorField f(g);
  for (int s = 0; s < 20; ++s) st = solver.ns_step(st, f, dt);
  CHECK(st.u.l2_norm_sq() < e0);  // dissipative
  CHECK(solver.divergence(st.u).max_abs() < 1e-10);
}
