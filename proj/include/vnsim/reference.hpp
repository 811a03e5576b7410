#pragma once

#include <cmath>
#include <vector>

#include "vnsim/diagnostics.hpp"
#include "vnsim/fluid.hpp"

namespace vnsim {

// Independent reference computations used by the validation command and the
// test suite.

// Steady channel flow: unit horizontal body force, no-slip bottom, free-slip
// top on (0,1); exact profile u_x(z) = z - z^2/2. Returns the max nodal
// error of the discrete steady Stokes solution at resolution nz.
inline double channel_flow_error(int nz) {
  Grid g = Grid::make2d(1.0, 1.0, 4, nz);
  FluidSolver solver(g);
  VectorField force(g);
  for (double& v : force.comp[0]) v = 1.0;
  const FluidState st = solver.stokes_solve(force);
  double err = 0.0;
  for (int k = 0; k < g.nz; ++k) {
    const double z = (k + 0.5) * g.hz;
    const double exact = z - 0.5 * z * z;
    err = std::max(err, std::abs(st.u.u(0, 0, k) - exact));
  }
  return err;
}

// Fitted order of the channel-flow error over h in {1/16, 1/32, 1/64}.
inline double channel_flow_order() {
  std::vector<double> hs, errs;
  for (int nz : {16, 32, 64}) {
    hs.push_back(1.0 / nz);
    errs.push_back(channel_flow_error(nz));
  }
  return loglog_slope(hs, errs);
}

// Exact-translation transport check: with u = 0 and dt = hz the conservative
// remap shifts the density exactly one cell down. Returns the max cell error
// after `steps` steps against the shifted initial field.
inline double translation_error(int steps) {
  Grid g = Grid::make2d(1.0, 1.0, 16, 32);
  FluidSolver solver(g);
  InitialKineticSpec spec;
  spec.center = vec2(0.5, 0.7);
  spec.half_width = vec2(0.2, 0.15);
  ScalarField rho = blob_density(g, spec);
  const ScalarField rho0 = rho;
  VectorField zero(g);
  double absorbed = 0.0, truncated = 0.0;
  for (int s = 0; s < steps; ++s)
    rho = solver.transport_density(rho, zero, g.hz, absorbed, truncated);
  double err = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i) {
      const double expect = k + steps < g.nz ? rho0.at(i, 0, k + steps) : 0.0;
      err = std::max(err, std::abs(rho.at(i, 0, k) - expect));
    }
  return err;
}

// Reference ODE integration of the drag-gravity characteristic system
//   x' = v, v' = (u - v - e_z)/eps
// with spatially constant u, classical RK4 with many substeps. Compares one
// closed-form push against it; returns the max phase-space error.
inline double push_vs_ode_error(double eps, double dt, const Vec& u, const PhasePoint& p0,
                                int dim) {
  const int vz = dim - 1;
  const int nsub = 4096;
  const double h = dt / nsub;
  PhasePoint q = p0;
  auto rhs = [&](const PhasePoint& s, Vec& dx, Vec& dv) {
    for (int a = 0; a < dim; ++a) {
      dx[a] = s.v[a];
      dv[a] = (u[a] - s.v[a] - (a == vz ? 1.0 : 0.0)) / eps;
    }
  };
  for (int n = 0; n < nsub; ++n) {
    Vec k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
    PhasePoint s = q;
    rhs(s, k1x, k1v);
    for (int a = 0; a < dim; ++a) {
      s.x[a] = q.x[a] + 0.5 * h * k1x[a];
      s.v[a] = q.v[a] + 0.5 * h * k1v[a];
    }
    rhs(s, k2x, k2v);
    for (int a = 0; a < dim; ++a) {
      s.x[a] = q.x[a] + 0.5 * h * k2x[a];
      s.v[a] = q.v[a] + 0.5 * h * k2v[a];
    }
    rhs(s, k3x, k3v);
    for (int a = 0; a < dim; ++a) {
      s.x[a] = q.x[a] + h * k3x[a];
      s.v[a] = q.v[a] + h * k3v[a];
    }
    rhs(s, k4x, k4v);
    for (int a = 0; a < dim; ++a) {
      q.x[a] += h / 6.0 * (k1x[a] + 2.0 * k2x[a] + 2.0 * k3x[a] + k4x[a]);
      q.v[a] += h / 6.0 * (k1v[a] + 2.0 * k2v[a] + 2.0 * k3v[a] + k4v[a]);
    }
  }
  const PhasePoint closed = push_exponential(p0, u, eps, dt, dim);
  double err = 0.0;
  for (int a = 0; a < dim; ++a) {
    err = std::max(err, std::abs(closed.x[a] - q.x[a]));
    err = std::max(err, std::abs(closed.v[a] - q.v[a]));
  }
  return err;
}

// Worst push error over the eps battery (step scaled with eps so the
// reference integrator resolves the relaxation).
inline double push_oracle_error() {
  double worst = 0.0;
  PhasePoint p0;
  p0.x = vec2(0.3, 2.0);
  p0.v = vec2(0.7, 0.4);
  const Vec u = vec2(0.2, -0.1);
  for (double eps : {1e-3, 1.0, 1e3}) {
    const double dt = 0.5 * std::min(eps, 1.0);
    worst = std::max(worst, push_vs_ode_error(eps, dt, u, p0, 2));
  }
  return worst;
}

// H^-1 eigenmode identity: theta = sin(2 pi q x / Lx) sin(pi n z / Lz) has
// norm |theta|_{L2} / sqrt(1 + |k|^2) with the continuous symbol. Returns the
// relative error.
inline double hminus1_eigenmode_error() {
  Grid g = Grid::make2d(2.0, 1.5, 32, 48);
  ScalarField f(g);
  const int qm = 3, nm = 5;
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i) {
      const Vec c = g.center(i, 0, k);
      f.at(i, 0, k) = std::sin(2.0 * M_PI * qm * c[0] / g.domain.lx) *
                      std::sin(M_PI * nm * c[1] / g.domain.lz);
    }
  const double kx = 2.0 * M_PI * qm / g.domain.lx;
  const double kz = M_PI * nm / g.domain.lz;
  const double expected = f.l2_norm() / std::sqrt(1.0 + kx * kx + kz * kz);
  return std::abs(hminus1_norm(f) - expected) / expected;
}

// Periodic-in-z single-mode viscous decay: the scheme damps the mode by
// exactly (1 - dt*lambda_d) per explicit step (lambda_d the discrete
// symbol); returns the max deviation after `steps` steps.
inline double stokes_mode_decay_error(int steps = 100) {
  Grid g = Grid::make2d(1.0, 1.0, 16, 32);
  FluidOptions opt;
  opt.periodic_z = true;
  FluidSolver solver(g, opt);
  FluidState st(g);
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i)
      st.u.u(i, 0, k) = std::sin(2.0 * M_PI * (k + 0.5) * g.hz / g.domain.lz);
  const VectorField u0 = st.u;
  const double lam = (2.0 - 2.0 * std::cos(2.0 * M_PI * g.hz / g.domain.lz)) / (g.hz * g.hz);
  const double dt = 0.2 * g.hz * g.hz;  // well inside the explicit limit
  VectorField zero_force(g);
  for (int s = 0; s < steps; ++s) st = solver.ns_step(st, zero_force, dt);
  const double amp = std::pow(1.0 - dt * lam, steps);
  double err = 0.0;
  for (int k = 0; k < g.nz; ++k)
    for (int i = 0; i < g.nx; ++i)
      err = std::max(err, std::abs(st.u.u(i, 0, k) - amp * u0.u(i, 0, k)));
  return err;
}

}  // namespace vnsim
