#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "vnsim/kinetic.hpp"
#include "vnsim/ops.hpp"
#include "vnsim/poisson.hpp"

namespace vnsim {

struct StepRejected : std::runtime_error {
  double suggested_dt;
  explicit StepRejected(double sdt)
      : std::runtime_error("time step rejected by CFL check; suggested dt = " +
                           std::to_string(sdt)),
        suggested_dt(sdt) {}
};

enum class AdvectionScheme { skew_symmetric, upwind2 };

struct FluidOptions {
  AdvectionScheme advection = AdvectionScheme::skew_symmetric;
  bool implicit_diffusion = false;
  bool periodic_z = false;      // wall-free test mode (both axes periodic)
  double cfl_factor = 0.9;
  double projection_tol = 1e-10;
  double stokes_tol = 1e-9;
  int stokes_max_iters = 2000;
  // Viscosity is fixed to 1 (normalized system).
};

struct FluidState {
  VectorField u;
  ScalarField p;
  double t = 0.0;

  FluidState() = default;
  explicit FluidState(const Grid& g) : u(g), p(g) {}
};

struct LimitState {
  FluidState fluid;
  ScalarField rho;
  double absorbed_mass = 0.0;
  double truncation_loss = 0.0;
  double initial_mass = 0.0;
  // Neumaier compensation of the step-by-step ledger accumulation.
  double absorbed_comp = 0.0;
  double truncation_comp = 0.0;

  LimitState() = default;
  explicit LimitState(const Grid& g) : fluid(g), rho(g) {}

  double absorbed_total() const { return absorbed_mass + absorbed_comp; }
  double truncated_total() const { return truncation_loss + truncation_comp; }
  double ledger_defect() const {
    return rho.integral() + absorbed_total() + truncated_total() - initial_mass;
  }
};

inline void deposit_mass(ScalarField& rho, const Vec& x, double amount_per_volume,
                         double& wall_frac, double& top_frac);

// Incompressible MAC solver on the strip: no-slip wall at z=0, impermeable
// free-slip top, exact discrete Helmholtz projection through the compatible
// FFT/tridiagonal Poisson solve.
class FluidSolver {
 public:
  FluidSolver(const Grid& g, FluidOptions opt = {}) : g_(g), opt_(opt) {
    if (opt.periodic_z) {
      poisson_ = std::make_unique<SpectralSolver>(g, g.nz, VerticalBC::periodic);
      hh_center_ = std::make_unique<SpectralSolver>(g, g.nz, VerticalBC::periodic);
    } else {
      poisson_ = std::make_unique<SpectralSolver>(g, g.nz, VerticalBC::neumann_center);
      hh_center_ = std::make_unique<SpectralSolver>(g, g.nz, VerticalBC::noslip_center);
      if (g.nz > 1)
        hh_face_ = std::make_unique<SpectralSolver>(g, g.nz - 1, VerticalBC::dirichlet_face);
    }
  }

  const Grid& grid() const { return g_; }
  const FluidOptions& options() const { return opt_; }

  double advective_cfl_limit(const VectorField& u) const {
    const double vmax = u.max_abs();
    return vmax > 0.0 ? g_.min_spacing() / vmax : std::numeric_limits<double>::infinity();
  }
  double diffusive_cfl_limit() const {
    const double h = g_.min_spacing();
    return h * h / (2.0 * g_.dim());
  }
  double stable_dt(const VectorField& u) const {
    double lim = advective_cfl_limit(u);
    if (!opt_.implicit_diffusion) lim = std::min(lim, diffusive_cfl_limit());
    return opt_.cfl_factor * lim;
  }

  // One projection step: advection + diffusion + force, then exact discrete
  // Leray projection. Throws StepRejected on CFL violation.
  FluidState ns_step(const FluidState& state, const VectorField& force, double dt) {
    const double max_dt = stable_dt(state.u);
    if (dt > max_dt * (1.0 + 1e-12)) throw StepRejected(max_dt);

    VectorField star = state.u;
    const VectorField adv = advection(state.u);
    if (opt_.implicit_diffusion) {
      for (int c = 0; c < g_.dim(); ++c)
        for (size_t i = 0; i < star.comp[c].size(); ++i)
          star.comp[c][i] += dt * (-adv.comp[c][i] + force.comp[c][i]);
      impose_walls(star);
      helmholtz_all(star, dt);
    } else {
      const VectorField lap = laplacian(state.u);
      for (int c = 0; c < g_.dim(); ++c)
        for (size_t i = 0; i < star.comp[c].size(); ++i)
          star.comp[c][i] += dt * (-adv.comp[c][i] + lap.comp[c][i] + force.comp[c][i]);
    }
    impose_walls(star);

    FluidState next(g_);
    next.t = state.t + dt;
    next.u = star;
    ScalarField phi = project(next.u);
    for (size_t i = 0; i < phi.values.size(); ++i) next.p.values[i] = phi.values[i] / dt;
    return next;
  }

  // Removes the discrete-divergence part of u in place; returns the
  // potential phi.
  ScalarField project(VectorField& u) {
    impose_walls(u);
    ScalarField div = divergence(u);
    // The spectral solver inverts (sigma - Lap); negate so phi solves
    // Lap phi = div u.
    for (double& v : div.values) v = -v;
    ScalarField phi(g_);
    poisson_->solve(div.values, phi.values, 0.0);
    subtract_gradient(u, phi);
    impose_walls(u);
    return phi;
  }

  ScalarField divergence(const VectorField& f) const {
    if (!opt_.periodic_z) return discrete_div(f);
    ScalarField d(g_);
    for (int k = 0; k < g_.nz; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
          double s = (f.u(pmod(i + 1, g_.nx), j, k) - f.u(i, j, k)) / g_.hx;
          if (g_.dim() == 3) s += (f.v(i, pmod(j + 1, g_.ny), k) - f.v(i, j, k)) / g_.hy;
          s += (f.comp[f.vertical()][f.widx(i, j, pmod(k + 1, g_.nz))] - f.w(i, j, k)) / g_.hz;
          d.at(i, j, k) = s;
        }
    return d;
  }

  // Steady Stokes: -Lap u + grad p = force, div u = 0, by pseudo-transient
  // Richardson iteration with an implicit Helmholtz step and projection.
  // The fixed point is the exact discrete steady solution for any tau.
  FluidState stokes_solve(const VectorField& force) {
    const double lz = g_.domain.lz;
    const double tau = 4.0 * lz * lz;
    FluidState state(g_);
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opt_.stokes_max_iters; ++it) {
      VectorField next = state.u;
      for (int c = 0; c < g_.dim(); ++c)
        for (size_t i = 0; i < next.comp[c].size(); ++i)
          next.comp[c][i] += tau * force.comp[c][i];
      impose_walls(next);
      helmholtz_all(next, tau);
      impose_walls(next);
      ScalarField phi = project(next);
      residual = 0.0;
      for (int c = 0; c < g_.dim(); ++c)
        for (size_t i = 0; i < next.comp[c].size(); ++i)
          residual = std::max(residual, std::abs(next.comp[c][i] - state.u.comp[c][i]));
      residual /= tau;
      state.u = next;
      for (size_t i = 0; i < phi.values.size(); ++i) state.p.values[i] += phi.values[i] / tau;
      if (residual <= opt_.stokes_tol) return state;
    }
    throw std::runtime_error("stokes_solve: no convergence, residual = " +
                             std::to_string(residual));
  }

  // One step of the hydrodynamic-limit system: conservative characteristic
  // remap of the density along u - e_z (outflow through the wall feeds the
  // absorbed-mass ledger, inflow from above is zero), then a fluid step
  // forced by -rho e_z.
  LimitState limit_step(const LimitState& state, double dt) {
    LimitState next(g_);
    next.fluid.t = state.fluid.t + dt;
    next.absorbed_mass = state.absorbed_mass;
    next.truncation_loss = state.truncation_loss;
    next.absorbed_comp = state.absorbed_comp;
    next.truncation_comp = state.truncation_comp;
    next.initial_mass = state.initial_mass;
    double step_abs = 0.0, step_trn = 0.0;
    next.rho = transport_density(state.rho, state.fluid.u, dt, step_abs, step_trn);
    auto neumaier = [](double& s, double& c, double v) {
      const double t = s + v;
      c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      s = t;
    };
    neumaier(next.absorbed_mass, next.absorbed_comp, step_abs);
    neumaier(next.truncation_loss, next.truncation_comp, step_trn);

    // Buoyancy-type forcing -rho e_z on the vertical faces.
    VectorField force(g_);
    for (int k = 1; k < g_.nz; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i)
          force.w(i, j, k) = -0.5 * (next.rho.at(i, j, k - 1) + next.rho.at(i, j, k));
    next.fluid = ns_step(state.fluid, force, dt);
    return next;
  }

  // Conservative remap of a cell-centered density along the velocity
  // u - e_z: each cell's mass parcel is traced forward by an RK2 midpoint
  // step and re-deposited CIC. Mass crossing z=0 goes to `absorbed`, mass
  // leaving through the top to `truncated`; the ledger is exact.
  ScalarField transport_density(const ScalarField& rho, const VectorField& u, double dt,
                                double& absorbed, double& truncated) const {
    ScalarField out(g_);
    const int dim = g_.dim();
    const double vol = g_.cell_volume();
    double abs_acc = 0.0, abs_c = 0.0, trn_acc = 0.0, trn_c = 0.0;
    auto neumaier = [](double& s, double& c, double v) {
      const double t = s + v;
      c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      s = t;
    };
    for (int k = 0; k < g_.nz; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
          const double m = rho.at(i, j, k) * vol;
          if (m == 0.0) continue;
          const Vec xc = g_.center(i, j, k);
          Vec vel = extended_velocity(u, xc);
          vel[dim - 1] -= 1.0;
          Vec xm = xc;
          for (int a = 0; a < dim; ++a) xm[a] += 0.5 * dt * vel[a];
          if (xm[dim - 1] >= 0.0 && xm[dim - 1] <= g_.domain.lz) {
            vel = extended_velocity(u, g_.domain.wrap(xm));
            vel[dim - 1] -= 1.0;
          }
          Vec x1 = xc;
          for (int a = 0; a < dim; ++a) x1[a] += dt * vel[a];
          if (x1[dim - 1] <= 0.0) {
            neumaier(abs_acc, abs_c, m);
            continue;
          }
          if (x1[dim - 1] >= g_.domain.lz) {
            neumaier(trn_acc, trn_c, m);
            continue;
          }
          double wf = 0.0, tf = 0.0;
          deposit_mass(out, g_.domain.wrap(x1), m / vol, wf, tf);
          if (wf > 0.0) neumaier(abs_acc, abs_c, m * wf);
          if (tf > 0.0) neumaier(trn_acc, trn_c, m * tf);
        }
    absorbed += abs_acc + abs_c;
    truncated += trn_acc + trn_c;
    return out;
  }

  // --- spatial operators --------------------------------------------------

  VectorField laplacian(const VectorField& f) const {
    VectorField out(g_);
    const int dim = g_.dim();
    for (int a = 0; a < dim - 1; ++a)
      for (int k = 0; k < g_.nz; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i) {
            const double c = f.comp[a][g_.cidx(i, j, k)];
            double s = (f.comp[a][g_.cidx(pmod(i + 1, g_.nx), j, k)] - 2.0 * c +
                        f.comp[a][g_.cidx(pmod(i - 1, g_.nx), j, k)]) /
                       (g_.hx * g_.hx);
            if (dim == 3)
              s += (f.comp[a][g_.cidx(i, pmod(j + 1, g_.ny), k)] - 2.0 * c +
                    f.comp[a][g_.cidx(i, pmod(j - 1, g_.ny), k)]) /
                   (g_.hy * g_.hy);
            s += (hval(f, a, i, j, k + 1) - 2.0 * c + hval(f, a, i, j, k - 1)) / (g_.hz * g_.hz);
            out.comp[a][g_.cidx(i, j, k)] = s;
          }
    const int kmin = opt_.periodic_z ? 0 : 1;
    for (int k = kmin; k <= g_.nz - 1; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
          const double c = wval(f, i, j, k);
          double s = (wval(f, pmod(i + 1, g_.nx), j, k) - 2.0 * c +
                      wval(f, pmod(i - 1, g_.nx), j, k)) /
                     (g_.hx * g_.hx);
          if (dim == 3)
            s += (wval(f, i, pmod(j + 1, g_.ny), k) - 2.0 * c + wval(f, i, pmod(j - 1, g_.ny), k)) /
                 (g_.hy * g_.hy);
          s += (wval(f, i, j, k + 1) - 2.0 * c + wval(f, i, j, k - 1)) / (g_.hz * g_.hz);
          out.comp[out.vertical()][out.widx(i, j, k)] = s;
        }
    return out;
  }

  VectorField advection(const VectorField& f) const {
    return opt_.advection == AdvectionScheme::skew_symmetric ? advection_skew(f)
                                                             : advection_upwind(f);
  }

  void impose_walls(VectorField& f) const {
    const int vz = f.vertical();
    if (opt_.periodic_z) {
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i)
          f.comp[vz][f.widx(i, j, g_.nz)] = f.comp[vz][f.widx(i, j, 0)];
      return;
    }
    for (int j = 0; j < g_.ny; ++j)
      for (int i = 0; i < g_.nx; ++i) {
        f.comp[vz][f.widx(i, j, 0)] = 0.0;
        f.comp[vz][f.widx(i, j, g_.nz)] = 0.0;
      }
  }

 private:
  // Horizontal component with vertical ghost rows resolved per wall mode.
  double hval(const VectorField& f, int a, int i, int j, int k) const {
    if (opt_.periodic_z) return f.comp[a][g_.cidx(i, j, pmod(k, g_.nz))];
    return detail::hcomp_at(f, a, i, j, k);
  }
  // Vertical component; outside rows are the (zero) wall values.
  double wval(const VectorField& f, int i, int j, int k) const {
    if (opt_.periodic_z) return f.comp[f.vertical()][f.widx(i, j, pmod(k, g_.nz))];
    if (k < 0 || k > g_.nz) return 0.0;
    return f.comp[f.vertical()][f.widx(i, j, k)];
  }

  void subtract_gradient(VectorField& u, const ScalarField& phi) const {
    for (int k = 0; k < g_.nz; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i)
          u.u(i, j, k) -= (phi.at(i, j, k) - phi.at(pmod(i - 1, g_.nx), j, k)) / g_.hx;
    if (g_.dim() == 3)
      for (int k = 0; k < g_.nz; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i)
            u.v(i, j, k) -= (phi.at(i, j, k) - phi.at(i, pmod(j - 1, g_.ny), k)) / g_.hy;
    const int kmin = opt_.periodic_z ? 0 : 1;
    for (int k = kmin; k < g_.nz; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i)
          u.w(i, j, k) -=
              (phi.at(i, j, k) - phi.at(i, j, k == 0 ? g_.nz - 1 : k - 1)) / g_.hz;
  }

  // (I - dt*Lap) x = rhs for every component, reusing the spectral solvers
  // with sigma = 1/dt.
  void helmholtz_all(VectorField& f, double dt) {
    const double sigma = 1.0 / dt;
    std::vector<double> rhs, sol;
    for (int a = 0; a < g_.dim() - 1; ++a) {
      rhs = f.comp[a];
      for (double& v : rhs) v *= sigma;
      hh_center_->solve(rhs, sol, sigma);
      f.comp[a] = sol;
    }
    const int vz = f.vertical();
    if (opt_.periodic_z) {
      const long layer = static_cast<long>(g_.nx) * g_.ny;
      rhs.assign(f.comp[vz].begin(), f.comp[vz].begin() + layer * g_.nz);
      for (double& v : rhs) v *= sigma;
      hh_center_->solve(rhs, sol, sigma);
      std::copy(sol.begin(), sol.end(), f.comp[vz].begin());
      impose_walls(f);  // refresh the mirror row
    } else if (g_.nz > 1) {
      const long layer = static_cast<long>(g_.nx) * g_.ny;
      rhs.assign(f.comp[vz].begin() + layer, f.comp[vz].begin() + layer * g_.nz);
      for (double& v : rhs) v *= sigma;
      hh_face_->solve(rhs, sol, sigma);
      std::copy(sol.begin(), sol.end(), f.comp[vz].begin() + layer);
    }
  }

  // Skew-symmetric (average of divergence and advective) MAC convection.
  VectorField advection_skew(const VectorField& f) const {
    VectorField out(g_);
    const int dim = g_.dim();
    // Horizontal components.
    for (int a = 0; a < dim - 1; ++a)
      for (int k = 0; k < g_.nz; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i) {
            double acc = 0.0;
            for (int b = 0; b < dim; ++b) acc += skew_term(f, a, b, i, j, k);
            out.comp[a][g_.cidx(i, j, k)] = acc;
          }
    // Vertical component, interior faces (all faces in periodic mode).
    const int vz = dim - 1;
    const int kmin = opt_.periodic_z ? 0 : 1;
    for (int k = kmin; k < g_.nz; ++k)
      for (int j = 0; j < g_.ny; ++j)
        for (int i = 0; i < g_.nx; ++i) {
          double acc = 0.0;
          for (int b = 0; b < dim; ++b) acc += skew_term(f, vz, b, i, j, k);
          out.comp[vz][out.widx(i, j, k)] = acc;
        }
    return out;
  }

  // Component value with all boundary logic, by component id.
  double cval(const VectorField& f, int c, int i, int j, int k) const {
    i = pmod(i, g_.nx);
    j = g_.dim() == 3 ? pmod(j, g_.ny) : 0;
    if (c == g_.dim() - 1) return wval(f, i, j, k);
    return hval(f, c, i, j, k);
  }

  // d/dx_b (u_b u_c) skew-symmetric contribution at the node of component c.
  double skew_term(const VectorField& f, int c, int b, int i, int j, int k) const {
    const int di[3] = {1, 0, 0};
    const int dj[3] = {0, 1, 0};
    const int dk[3] = {0, 0, 1};
    // Map logical axes to index shifts: axis 0 -> i, axis dim-1 -> k,
    // middle axis (3D) -> j.
    auto shift = [&](int axis, int s, int& ii, int& jj, int& kk) {
      if (axis == 0)
        ii += s * di[0];
      else if (axis == g_.dim() - 1)
        kk += s * dk[2];
      else
        jj += s * dj[1];
    };
    const double hb = g_.spacing(b);
    if (b == c) {
      int ip = i, jp = j, kp = k, im = i, jm = j, km = k;
      shift(c, 1, ip, jp, kp);
      shift(c, -1, im, jm, km);
      const double up = 0.5 * (cval(f, c, i, j, k) + cval(f, c, ip, jp, kp));
      const double um = 0.5 * (cval(f, c, im, jm, km) + cval(f, c, i, j, k));
      const double divf = (up * up - um * um) / hb;
      const double advf =
          cval(f, c, i, j, k) * (cval(f, c, ip, jp, kp) - cval(f, c, im, jm, km)) / (2.0 * hb);
      return 0.5 * (divf + advf);
    }
    // Transverse transport: fluxes at the two b-corners of the c-node.
    int ibp = i, jbp = j, kbp = k;  // +e_b
    shift(b, 1, ibp, jbp, kbp);
    int ibm = i, jbm = j, kbm = k;  // -e_b
    shift(b, -1, ibm, jbm, kbm);
    int ibpc = ibp, jbpc = jbp, kbpc = kbp;  // +e_b -e_c
    shift(c, -1, ibpc, jbpc, kbpc);
    int ic = i, jc = j, kc = k;  // -e_c
    shift(c, -1, ic, jc, kc);

    const double ub_p = 0.5 * (cval(f, b, ibp, jbp, kbp) + cval(f, b, ibpc, jbpc, kbpc));
    const double ub_m = 0.5 * (cval(f, b, i, j, k) + cval(f, b, ic, jc, kc));
    const double uc_p = 0.5 * (cval(f, c, i, j, k) + cval(f, c, ibp, jbp, kbp));
    const double uc_m = 0.5 * (cval(f, c, ibm, jbm, kbm) + cval(f, c, i, j, k));
    const double divf = (ub_p * uc_p - ub_m * uc_m) / hb;
    const double ub_node = 0.5 * (ub_p + ub_m);
    const double advf =
        ub_node * (cval(f, c, ibp, jbp, kbp) - cval(f, c, ibm, jbm, kbm)) / (2.0 * hb);
    return 0.5 * (divf + advf);
  }

  // Second-order upwind-biased advective form; falls back to first order
  // where the three-point upwind stencil would cross a wall.
  VectorField advection_upwind(const VectorField& f) const {
    VectorField out(g_);
    const int dim = g_.dim();
    auto deriv = [&](int c, int b, int i, int j, int k, double vel) {
      auto at = [&](int s) {
        int ii = i, jj = j, kk = k;
        if (b == 0)
          ii += s;
        else if (b == dim - 1)
          kk += s;
        else
          jj += s;
        return cval(f, c, ii, jj, kk);
      };
      const double hb = g_.spacing(b);
      const bool vertical = b == dim - 1 && !opt_.periodic_z;
      if (vel >= 0.0) {
        const bool have2 = !vertical || k - 2 >= (c == dim - 1 ? 0 : -1);
        if (have2) return (3.0 * at(0) - 4.0 * at(-1) + at(-2)) / (2.0 * hb);
        return (at(0) - at(-1)) / hb;
      }
      const bool have2 = !vertical || k + 2 <= (c == dim - 1 ? g_.nz : g_.nz);
      if (have2) return (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * hb);
      return (at(1) - at(0)) / hb;
    };
    auto node_vel = [&](int c, int b, int i, int j, int k) {
      if (b == c) return cval(f, c, i, j, k);
      int ibp = i, jbp = j, kbp = k;
      if (b == 0)
        ++ibp;
      else if (b == dim - 1)
        ++kbp;
      else
        ++jbp;
      int ic = i, jc = j, kc = k;
      if (c == 0)
        --ic;
      else if (c == dim - 1)
        --kc;
      else
        --jc;
      int ibpc = ibp, jbpc = jbp, kbpc = kbp;
      if (c == 0)
        --ibpc;
      else if (c == dim - 1)
        --kbpc;
      else
        --jbpc;
      return 0.25 * (cval(f, b, i, j, k) + cval(f, b, ic, jc, kc) + cval(f, b, ibp, jbp, kbp) +
                     cval(f, b, ibpc, jbpc, kbpc));
    };
    for (int c = 0; c < dim; ++c) {
      const bool is_w = c == dim - 1;
      const int kmin = is_w && !opt_.periodic_z ? 1 : 0;
      const int kmax = is_w ? g_.nz - 1 : g_.nz - 1;
      for (int k = kmin; k <= kmax; ++k)
        for (int j = 0; j < g_.ny; ++j)
          for (int i = 0; i < g_.nx; ++i) {
            double acc = 0.0;
            for (int b = 0; b < dim; ++b) {
              const double vel = node_vel(c, b, i, j, k);
              acc += vel * deriv(c, b, i, j, k, vel);
            }
            if (is_w)
              out.comp[c][out.widx(i, j, k)] = acc;
            else
              out.comp[c][g_.cidx(i, j, k)] = acc;
          }
    }
    return out;
  }

  Grid g_;
  FluidOptions opt_;
  std::unique_ptr<SpectralSolver> poisson_, hh_center_, hh_face_;
};

// Divergence-free initial velocity from a discrete streamfunction: a single
// horizontal-mode vortex whose profile vanishes with its derivative at the
// wall. In 3D the pattern is extruded along y.
inline VectorField vortex_field(const Grid& g, double amplitude) {
  VectorField f(g);
  const double lx = g.domain.lx, lz = g.domain.lz;
  auto psi = [&](int i, int k) {
    const double x = i * g.hx, z = k * g.hz;
    const double s = std::sin(M_PI * z / lz);
    return amplitude * std::sin(2.0 * M_PI * x / lx) * s * s;
  };
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        f.u(i, j, k) = (psi(i, k + 1) - psi(i, k)) / g.hz;
  for (int k = 1; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        f.w(i, j, k) = -(psi(pmod(i + 1, g.nx), k) - psi(i, k)) / g.hx;
  return f;
}

// CIC deposit of a mass parcel into a cell-centered density field (shared
// with the kinetic deposition kernel; wall clipping keeps mass exact).
// Cell-centered CIC deposit with an absorbing wall: the kernel fractions
// falling below z=0 (resp. above z=lz) are reported in wall_frac (top_frac)
// instead of being clipped back into the boundary cell. Without this the
// remap reflects slow outflow at the wall: a parcel re-gridded to the bottom
// cell center can never reach z <= 0 when the per-step displacement is
// smaller than hz/2, and mass piles up instead of being absorbed.
inline void deposit_mass(ScalarField& rho, const Vec& x, double amount_per_volume,
                         double& wall_frac, double& top_frac) {
  const Grid& g = rho.grid;
  const int dim = g.dim();
  detail::CicAxis ax = detail::cic_periodic(x[0], g.hx, g.nx);
  detail::CicAxis ay{{0, 0}, {1.0, 0.0}};
  if (dim == 3) ay = detail::cic_periodic(x[1], g.hy, g.ny);
  const double sz = x[dim - 1] / g.hz - 0.5;
  const double fl = std::floor(sz);
  const int i0 = static_cast<int>(fl);
  const double f = sz - fl;
  wall_frac = 0.0;
  top_frac = 0.0;
  detail::CicAxis az{{0, 0}, {1.0 - f, f}};
  if (i0 < 0) {
    wall_frac = 1.0 - f;
    az = {{0, 0}, {0.0, f}};
  } else if (i0 >= g.nz - 1) {
    top_frac = f;
    az = {{g.nz - 1, g.nz - 1}, {1.0 - f, 0.0}};
  } else {
    az.lo[0] = i0;
    az.lo[1] = i0 + 1;
  }
  for (int dk = 0; dk < 2; ++dk)
    for (int dj = 0; dj < (dim == 3 ? 2 : 1); ++dj)
      for (int di = 0; di < 2; ++di) {
        const double s = ax.w[di] * (dim == 3 ? ay.w[dj] : 1.0) * az.w[dk];
        if (s == 0.0) continue;
        rho.values[g.cidx(ax.lo[di], ay.lo[dj], az.lo[dk])] += s * amount_per_volume;
      }
}

}  // namespace vnsim
