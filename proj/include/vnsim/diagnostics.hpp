#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "vnsim/fluid.hpp"
#include "vnsim/kinetic.hpp"

namespace vnsim {

// ---------------------------------------------------------------------------
// Energies and dissipation of the coupled system.
// ---------------------------------------------------------------------------

struct EnergyReport {
  double t = 0.0;
  double kinetic = 0.0;                 // 1/2 |u|^2 + (eps/2) sum w |v|^2
  double potential = 0.0;               // sum w z
  double total = 0.0;
  double dissipation = 0.0;             // |grad u|^2 + sum w |v - u(x)|^2
  double cumulative_dissipation = 0.0;  // trapezoid in t
  double inequality_residual = 0.0;     // E(t) + int_0^t D - E(0), expected <= 0 up to scheme error
};

inline double kinetic_energy(const ParticleEnsemble& ens, const VectorField& u, double eps) {
  double s = 0.0;
  for (size_t i = 0; i < ens.size(); ++i)
    if (ens.alive[i]) s += ens.weight[i] * norm(ens.v[i], ens.dim) * norm(ens.v[i], ens.dim);
  return 0.5 * u.l2_norm_sq() + 0.5 * eps * s;
}

inline double potential_energy(const ParticleEnsemble& ens) {
  double s = 0.0;
  for (size_t i = 0; i < ens.size(); ++i)
    if (ens.alive[i]) s += ens.weight[i] * ens.x[i][ens.dim - 1];
  return s;
}

inline double dissipation(const ParticleEnsemble& ens, const VectorField& u) {
  double s = grad_l2_norm_sq(u);
  for (size_t i = 0; i < ens.size(); ++i) {
    if (!ens.alive[i]) continue;
    const Vec uf = extended_velocity(u, ens.x[i]);
    double d = 0.0;
    for (int a = 0; a < ens.dim; ++a) {
      const double r = ens.v[i][a] - uf[a];
      d += r * r;
    }
    s += ens.weight[i] * d;
  }
  return s;
}

// Relaxation functional sum w |v - (u(x) - e_z)|^2; with u frozen at zero it
// contracts exactly by e^{-2 dt/eps} per push.
inline double monokinetic_concentration(const ParticleEnsemble& ens, const VectorField& u) {
  double s = 0.0;
  for (size_t i = 0; i < ens.size(); ++i) {
    if (!ens.alive[i]) continue;
    const Vec uf = extended_velocity(u, ens.x[i]);
    double d = 0.0;
    for (int a = 0; a < ens.dim; ++a) {
      const double drift = uf[a] - (a == ens.dim - 1 ? 1.0 : 0.0);
      const double r = ens.v[i][a] - drift;
      d += r * r;
    }
    s += ens.weight[i] * d;
  }
  return s;
}

// Feeds consecutive snapshots; accumulates the dissipation integral and the
// energy-inequality residual against the first snapshot.
class EnergyTracker {
 public:
  explicit EnergyTracker(double eps) : eps_(eps) {}

  EnergyReport add(const ParticleEnsemble& ens, const FluidState& fluid) {
    EnergyReport r;
    r.t = fluid.t;
    r.kinetic = kinetic_energy(ens, fluid.u, eps_);
    r.potential = potential_energy(ens);
    r.total = r.kinetic + r.potential;
    r.dissipation = dissipation(ens, fluid.u);
    if (have_prev_) {
      if (fluid.t < prev_t_) throw std::invalid_argument("EnergyTracker: time went backwards");
      cum_ += 0.5 * (fluid.t - prev_t_) * (r.dissipation + prev_d_);
    } else {
      e0_ = r.total;
    }
    r.cumulative_dissipation = cum_;
    r.inequality_residual = r.total + cum_ - e0_;
    have_prev_ = true;
    prev_t_ = fluid.t;
    prev_d_ = r.dissipation;
    return r;
  }

  // Advances the dissipation integral to time t with an externally computed
  // integrand, so the run loop can feed every step (the checkpoint spacing is
  // too coarse to resolve the initial relaxation of D at rate 2/eps).
  // Requires an initial add(); a repeated time contributes nothing.
  void integrate(double t, double d) {
    if (!have_prev_) throw std::logic_error("EnergyTracker: integrate before first add");
    if (t < prev_t_) throw std::invalid_argument("EnergyTracker: time went backwards");
    cum_ += 0.5 * (t - prev_t_) * (d + prev_d_);
    prev_t_ = t;
    prev_d_ = d;
  }

  double initial_energy() const { return e0_; }

 private:
  double eps_;
  bool have_prev_ = false;
  double prev_t_ = 0.0, prev_d_ = 0.0, cum_ = 0.0, e0_ = 0.0;
};

// ---------------------------------------------------------------------------
// Regularity monitors.
// ---------------------------------------------------------------------------

// Max norm of the MAC gradient, same stencil family as grad_l2_norm_sq.
inline double grad_max_norm(const VectorField& f) {
  const Grid& g = f.grid;
  double m = 0.0;
  auto upd = [&m](double d) { m = std::max(m, std::abs(d)); };
  for (int a = 0; a < g.dim() - 1; ++a) {
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double c = f.comp[a][g.cidx(i, j, k)];
          upd((f.comp[a][g.cidx(pmod(i + 1, g.nx), j, k)] - c) / g.hx);
          if (g.dim() == 3) upd((f.comp[a][g.cidx(i, pmod(j + 1, g.ny), k)] - c) / g.hy);
        }
    for (int k = 0; k <= g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          upd((detail::hcomp_at(f, a, i, j, k) - detail::hcomp_at(f, a, i, j, k - 1)) / g.hz);
  }
  const int vz = g.dim() - 1;
  for (int k = 0; k <= g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double c = f.comp[vz][f.widx(i, j, k)];
        upd((f.comp[vz][f.widx(pmod(i + 1, g.nx), j, k)] - c) / g.hx);
        if (g.dim() == 3) upd((f.comp[vz][f.widx(i, pmod(j + 1, g.ny), k)] - c) / g.hy);
        if (k < g.nz) upd((f.comp[vz][f.widx(i, j, k + 1)] - c) / g.hz);
      }
  return m;
}

// Unique positive root of delta e^delta = 1/9 (Newton, tol 1e-12): below this
// value of the integrated gradient the Lagrangian change of variables stays
// invertible.
inline double delta_star() {
  double d = 0.1;
  for (int it = 0; it < 100; ++it) {
    const double f = d * std::exp(d) - 1.0 / 9.0;
    const double fp = (1.0 + d) * std::exp(d);
    const double step = f / fp;
    d -= step;
    if (std::abs(step) < 1e-15) break;
  }
  return d;
}

struct MonitorReport {
  double t = 0.0;
  double nabla_u_L1Linf = 0.0;  // int_0^t |grad u|_inf
  double u_L1Linf = 0.0;        // int_0^t |u|_inf
  double upsilon = 0.0;         // |u0|_H1^2 + int |F|^2 + int |F|
  double delta_star = 0.0;
  bool change_of_variable_regime = true;  // nabla monitor below delta_star
};

class MonitorTracker {
 public:
  explicit MonitorTracker(const VectorField& u0)
      : u0_h1_sq_(u0.l2_norm_sq() + grad_l2_norm_sq(u0)), dstar_(delta_star()) {}

  MonitorReport add(double t, const VectorField& u, double brinkman_l2) {
    const double gmax = grad_max_norm(u);
    const double umax = u.max_abs();
    if (have_prev_) {
      if (t < prev_t_) throw std::invalid_argument("MonitorTracker: time went backwards");
      const double dt = t - prev_t_;
      nabla_int_ += 0.5 * dt * (gmax + prev_gmax_);
      u_int_ += 0.5 * dt * (umax + prev_umax_);
      f2_int_ += 0.5 * dt * (brinkman_l2 * brinkman_l2 + prev_f_ * prev_f_);
      f1_int_ += 0.5 * dt * (brinkman_l2 + prev_f_);
    }
    have_prev_ = true;
    prev_t_ = t;
    prev_gmax_ = gmax;
    prev_umax_ = umax;
    prev_f_ = brinkman_l2;

    MonitorReport r;
    r.t = t;
    r.nabla_u_L1Linf = nabla_int_;
    r.u_L1Linf = u_int_;
    r.upsilon = u0_h1_sq_ + f2_int_ + f1_int_;
    r.delta_star = dstar_;
    r.change_of_variable_regime = nabla_int_ < dstar_;
    return r;
  }

 private:
  double u0_h1_sq_;
  double dstar_;
  bool have_prev_ = false;
  double prev_t_ = 0.0, prev_gmax_ = 0.0, prev_umax_ = 0.0, prev_f_ = 0.0;
  double nabla_int_ = 0.0, u_int_ = 0.0, f2_int_ = 0.0, f1_int_ = 0.0;
};

// ---------------------------------------------------------------------------
// Negative-order norm: Fourier modes horizontally, Dirichlet sine modes
// vertically, continuous symbols, weight 1/(1+|k|^2). With weight 1 the sum
// reproduces the discrete L2 norm exactly (orthogonal transforms).
// ---------------------------------------------------------------------------

inline double hminus1_norm(const ScalarField& f) {
  const Grid& g = f.grid;
  const int nx = g.nx, ny = g.ny, nz = g.nz;
  const int dim = g.dim();
  const long n = g.cell_count();

  // Naive separable transforms; diagnostic-grade cost O(N^{1/d} * N) per axis.
  std::vector<std::complex<double>> buf(f.values.begin(), f.values.end());
  std::vector<std::complex<double>> tmp(n);

  // DFT along x.
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j)
      for (int m = 0; m < nx; ++m) {
        std::complex<double> acc{0.0, 0.0};
        for (int i = 0; i < nx; ++i) {
          const double ph = -2.0 * M_PI * m * i / nx;
          acc += buf[g.cidx(i, j, k)] * std::complex<double>(std::cos(ph), std::sin(ph));
        }
        tmp[g.cidx(m, j, k)] = acc;
      }
  buf.swap(tmp);
  // DFT along y.
  if (dim == 3) {
    for (int k = 0; k < nz; ++k)
      for (int i = 0; i < nx; ++i)
        for (int m = 0; m < ny; ++m) {
          std::complex<double> acc{0.0, 0.0};
          for (int j = 0; j < ny; ++j) {
            const double ph = -2.0 * M_PI * m * j / ny;
            acc += buf[g.cidx(i, j, k)] * std::complex<double>(std::cos(ph), std::sin(ph));
          }
          tmp[g.cidx(i, m, k)] = acc;
        }
    buf.swap(tmp);
  }

  const double lx = g.domain.lx, ly = g.domain.ly, lz = g.domain.lz;
  const double horiz_cells = static_cast<double>(nx) * (dim == 3 ? ny : 1);
  double total = 0.0;
  for (int mj = 0; mj < (dim == 3 ? ny : 1); ++mj)
    for (int mi = 0; mi < nx; ++mi) {
      const int si = mi <= nx / 2 ? mi : mi - nx;
      const int sj = mj <= ny / 2 ? mj : mj - ny;
      const double kx = 2.0 * M_PI * si / lx;
      const double ky = dim == 3 ? 2.0 * M_PI * sj / ly : 0.0;
      // DST-II along z: modes sin(pi n (k+1/2)/nz), n = 1..nz.
      for (int nmode = 1; nmode <= nz; ++nmode) {
        std::complex<double> acc{0.0, 0.0};
        for (int k = 0; k < nz; ++k)
          acc += buf[g.cidx(mi, dim == 3 ? mj : 0, k)] *
                 std::sin(M_PI * nmode * (k + 0.5) / nz);
        const double kz = M_PI * nmode / lz;
        const double wz = nmode < nz ? 2.0 / nz : 1.0 / nz;
        const double sym = kx * kx + ky * ky + kz * kz;
        total += wz * std::norm(acc) / (1.0 + sym);
      }
    }
  return std::sqrt(total * g.cell_volume() / horiz_cells);
}

// ---------------------------------------------------------------------------
// Rate fits.
// ---------------------------------------------------------------------------

// Least-squares slope of log(value) against log(1+t), restricted to the
// window [ta, tb]. Requires >= 5 samples in the window, all positive.
inline double decay_fit(const std::vector<double>& times, const std::vector<double>& values,
                        double ta, double tb) {
  if (times.size() != values.size()) throw std::invalid_argument("decay_fit: size mismatch");
  std::vector<double> xs, ys;
  for (size_t i = 0; i < times.size(); ++i) {
    if (times[i] < ta || times[i] > tb) continue;
    if (!(values[i] > 0.0)) throw std::invalid_argument("decay_fit: nonpositive value in window");
    xs.push_back(std::log1p(times[i]));
    ys.push_back(std::log(values[i]));
  }
  if (xs.size() < 5) throw std::invalid_argument("decay_fit: need >= 5 samples in window");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("decay_fit: degenerate time window");
  return sxy / sxx;
}

// Log-log regression slope (used for error-vs-eps and error-vs-h rates).
inline double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2)
    throw std::invalid_argument("loglog_slope: need >= 2 matched samples");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0))
      throw std::invalid_argument("loglog_slope: values must be positive");
    mx += std::log(xs[i]);
    my += std::log(ys[i]);
  }
  mx /= xs.size();
  my /= ys.size();
  double sxx = 0.0, sxy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (std::log(xs[i]) - mx) * (std::log(xs[i]) - mx);
    sxy += (std::log(xs[i]) - mx) * (std::log(ys[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("loglog_slope: degenerate abscissae");
  return sxy / sxx;
}

// ---------------------------------------------------------------------------
// eps -> 0 convergence metrics.
// ---------------------------------------------------------------------------

// Checkpointed observables of one run, sampled on matched times and grids.
struct SnapshotSeries {
  std::vector<double> times;
  std::vector<VectorField> u;
  std::vector<ScalarField> rho;
  std::vector<double> brinkman_gap_sq;  // |F + rho e_z|_{L2}^2 per checkpoint (kinetic runs)
};

struct ConvergenceRow {
  double eps = 0.0;
  double u_err_L2 = 0.0;        // sup_t |u_eps - u|_{L2}
  double rho_err_Hm1 = 0.0;     // sup_t |rho_eps - rho|_{H^-1}
  double brinkman_gravity_gap = 0.0;  // |F_eps + rho_eps e_z|_{L2((0,T)xOmega)}
  double total() const { return u_err_L2 + rho_err_Hm1; }
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  double slope = std::numeric_limits<double>::quiet_NaN();  // log total error vs log eps
};

inline ConvergenceReport convergence_report(const std::vector<std::pair<double, SnapshotSeries>>& runs,
                                            const SnapshotSeries& limit) {
  ConvergenceReport rep;
  for (const auto& [eps, series] : runs) {
    if (series.times.size() != limit.times.size())
      throw std::invalid_argument("convergence_report: checkpoint count mismatch");
    ConvergenceRow row;
    row.eps = eps;
    double gap_int = 0.0;
    for (size_t s = 0; s < series.times.size(); ++s) {
      if (std::abs(series.times[s] - limit.times[s]) > 1e-9)
        throw std::invalid_argument("convergence_report: checkpoint times mismatch");
      if (!series.u[s].grid.same_layout(limit.u[s].grid))
        throw std::invalid_argument("convergence_report: grid mismatch");
      VectorField du = series.u[s];
      for (int c = 0; c < du.dim(); ++c)
        for (size_t i = 0; i < du.comp[c].size(); ++i) du.comp[c][i] -= limit.u[s].comp[c][i];
      row.u_err_L2 = std::max(row.u_err_L2, std::sqrt(du.l2_norm_sq()));
      ScalarField drho = series.rho[s];
      for (size_t i = 0; i < drho.values.size(); ++i) drho.values[i] -= limit.rho[s].values[i];
      row.rho_err_Hm1 = std::max(row.rho_err_Hm1, hminus1_norm(drho));
      if (s > 0 && !series.brinkman_gap_sq.empty())
        gap_int += 0.5 * (series.times[s] - series.times[s - 1]) *
                   (series.brinkman_gap_sq[s] + series.brinkman_gap_sq[s - 1]);
    }
    row.brinkman_gravity_gap = std::sqrt(gap_int);
    rep.rows.push_back(row);
  }
  if (rep.rows.size() >= 3) {
    std::vector<double> xs, ys;
    bool positive = true;
    for (const auto& r : rep.rows) {
      if (!(r.total() > 0.0)) positive = false;
      xs.push_back(r.eps);
      ys.push_back(r.total());
    }
    if (positive) rep.slope = loglog_slope(xs, ys);
  }
  return rep;
}

// Spatial |F + rho e_z|_{L2}^2 from cell-centered moments.
inline double brinkman_gravity_gap_sq(const KineticMoments& m) {
  const Grid& g = m.rho.grid;
  double s = 0.0;
  const int vz = g.dim() - 1;
  for (long i = 0; i < g.cell_count(); ++i)
    for (int c = 0; c < g.dim(); ++c) {
      const double val = m.brinkman[c].values[i] + (c == vz ? m.rho.values[i] : 0.0);
      s += val * val;
    }
  return s * g.cell_volume();
}

}  // namespace vnsim
