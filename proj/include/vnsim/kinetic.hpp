#pragma once

#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "vnsim/characteristics.hpp"
#include "vnsim/ops.hpp"
#include "vnsim/rng.hpp"

namespace vnsim {

// Discrete representation of the droplet distribution: equal-weight markers
// whose weights realize the conserved measure f dx dv. Absorbed and
// top-truncated mass are tracked separately so the ledger stays exact.
struct ParticleEnsemble {
  int dim = 2;
  std::vector<Vec> x;
  std::vector<Vec> v;
  std::vector<double> weight;
  std::vector<uint8_t> alive;
  double absorbed_mass = 0.0;
  double truncation_loss = 0.0;
  double initial_mass = 0.0;
  // Neumaier compensation for the two running ledgers (one credit per
  // particle, but 1e-12 relative over 1e5 credits needs compensation).
  double absorbed_comp = 0.0;
  double truncation_comp = 0.0;

  size_t size() const { return x.size(); }

  static void credit(double& s, double& c, double v) {
    const double t = s + v;
    c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
    s = t;
  }
  void credit_absorbed(double w) { credit(absorbed_mass, absorbed_comp, w); }
  void credit_truncated(double w) { credit(truncation_loss, truncation_comp, w); }
  double absorbed_total() const { return absorbed_mass + absorbed_comp; }
  double truncated_total() const { return truncation_loss + truncation_comp; }

  // Compensated sum, same reason as ScalarField::integral.
  double alive_mass() const {
    double s = 0.0, c = 0.0;
    for (size_t i = 0; i < weight.size(); ++i) {
      if (!alive[i]) continue;
      const double v = weight[i];
      const double t = s + v;
      c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      s = t;
    }
    return s + c;
  }
  long alive_count() const {
    long n = 0;
    for (uint8_t a : alive) n += a;
    return n;
  }
  // Should be ~0 at 1e-12 relative at all times.
  double ledger_defect() const {
    return alive_mass() + absorbed_total() + truncated_total() - initial_mass;
  }
};

// Compactly supported product bump: mass * prod cos^2(pi (x_a-c_a)/(2 w_a))/w_a
// on the box |x_a - c_a| < w_a, prescribed velocity profile Gaussian of
// temperature theta around mean_velocity (defaults to u0 - e_z).
struct InitialKineticSpec {
  Vec center{0.5, 0.5, 0.5};
  Vec half_width{0.2, 0.2, 0.2};
  double mass = 1.0;
  double temperature = 0.0;
  bool mean_from_fluid = true;  // mean velocity = u0(x) - e_z
  Vec mean_velocity{0.0, 0.0, 0.0};  // used when mean_from_fluid is false (e_z added by caller? no: as-is)

  void validate(const StripDomain& dom) const {
    if (mass <= 0.0) throw std::invalid_argument("kinetic spec: mass must be positive");
    if (temperature < 0.0) throw std::invalid_argument("kinetic spec: temperature must be >= 0");
    for (int a = 0; a < dom.dim; ++a)
      if (half_width[a] <= 0.0) throw std::invalid_argument("kinetic spec: half_width must be positive");
    const int vz = dom.dim - 1;
    if (center[vz] - half_width[vz] <= 0.0 || center[vz] + half_width[vz] >= dom.lz)
      throw std::invalid_argument("kinetic spec: support must stay strictly inside (0, lz)");
  }

  // Normalized density at x (integrates to `mass` over the box).
  double density(const Vec& p, int dim) const {
    double val = mass;
    for (int a = 0; a < dim; ++a) {
      const double s = (p[a] - center[a]) / half_width[a];
      if (std::abs(s) >= 1.0) return 0.0;
      const double c = std::cos(0.5 * M_PI * s);
      val *= c * c / half_width[a];
    }
    return val;
  }
};

namespace detail {

// Inverse CDF of the cos^2 bump marginal on [-1,1] (unit half-width),
// solved by bisection; the CDF is strictly increasing.
inline double bump_inv_cdf(double u) {
  auto cdf = [](double s) { return 0.5 * (s + 1.0) + std::sin(M_PI * s) / (2.0 * M_PI); };
  double lo = -1.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (cdf(mid) < u)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

// Samples the analytic blob density onto a cell-centered field (used as the
// limit-system initial density for matched runs).
inline ScalarField blob_density(const Grid& g, const InitialKineticSpec& spec) {
  spec.validate(g.domain);
  ScalarField rho(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        rho.at(i, j, k) = spec.density(g.center(i, j, k), g.dim());
  return rho;
}

// Deterministic sampler: Latin-hypercube stratified positions through the
// per-axis inverse CDF of the bump profile, inverse-CDF Gaussian velocities.
// u0 may be null (mean velocity -e_z plus any explicit offset).
inline ParticleEnsemble sample_initial(const InitialKineticSpec& spec, const StripDomain& dom,
                                       long count, uint64_t seed, const VectorField* u0 = nullptr) {
  spec.validate(dom);
  if (count < 0) throw std::invalid_argument("sample_initial: negative count");
  const int dim = dom.dim;
  ParticleEnsemble ens;
  ens.dim = dim;
  ens.x.resize(count);
  ens.v.resize(count);
  ens.weight.assign(count, count > 0 ? spec.mass / count : 0.0);
  ens.alive.assign(count, 1);
  // Compensated, like alive_mass: a plain sum over ~1e5 equal weights
  // carries enough rounding bias to trip the 1e-12 ledger check at step one.
  ens.initial_mass = ens.alive_mass();

  Rng rng(seed);
  std::vector<std::vector<uint32_t>> perm(dim);
  for (int a = 0; a < dim; ++a) perm[a] = rng.permutation(static_cast<uint32_t>(count));

  for (long i = 0; i < count; ++i) {
    Vec pos{0.0, 0.0, 0.0};
    for (int a = 0; a < dim; ++a) {
      const double u = (perm[a][i] + rng.uniform()) / count;
      pos[a] = spec.center[a] + spec.half_width[a] * detail::bump_inv_cdf(u);
    }
    pos = dom.wrap(pos);
    ens.x[i] = pos;

    Vec mean = spec.mean_velocity;
    if (spec.mean_from_fluid) {
      Vec uf = u0 ? interpolate(*u0, pos) : Vec{0.0, 0.0, 0.0};
      for (int a = 0; a < dim; ++a) mean[a] += uf[a];
      mean[dim - 1] -= 1.0;  // monokinetic preparation v = u0 - e_z
    }
    Vec vel = mean;
    if (spec.temperature > 0.0) {
      const double sigma = std::sqrt(spec.temperature);
      for (int a = 0; a < dim; ++a) vel[a] += sigma * norm_inv(rng.uniform());
    }
    ens.v[i] = vel;
  }
  return ens;
}

// ---------------------------------------------------------------------------
// Moments
// ---------------------------------------------------------------------------

// Cell-centered kinetic moments. j and the Brinkman force are collocated
// vectors, one scalar field per component.
struct KineticMoments {
  ScalarField rho;
  std::vector<ScalarField> j;
  std::vector<ScalarField> brinkman;  // F = j - rho * <u>, u averaged to centers
  // Face-staggered drag force, deposited per particle with the interpolation
  // weights, so <u, F> * vol = sum_p w_p u(x_p).(v_p - u(x_p)) exactly: the
  // drag work pairs with the particle relaxation term of the dissipation.
  VectorField brinkman_face;
  double relative_dissipation = 0.0;  // sum_p w_p |v_p - u(x_p)|^2

  VectorField brinkman_faces() const { return centers_to_faces(brinkman, rho.grid); }
};

namespace detail {

struct CicAxis {
  int lo[2];
  double w[2];
};

// Periodic CIC weights on cell centers along a horizontal axis.
inline CicAxis cic_periodic(double x, double h, int n) {
  const double s = x / h - 0.5;
  const double fl = std::floor(s);
  const int i0 = pmod(static_cast<int>(fl), n);
  const double f = s - fl;
  return {{i0, pmod(i0 + 1, n)}, {1.0 - f, f}};
}

// Vertical CIC with wall clipping: the kernel fraction that would fall
// outside [0, lz] is assigned to the adjacent boundary layer, so deposition
// conserves mass exactly.
inline CicAxis cic_vertical(double z, double h, int n) {
  const double s = z / h - 0.5;
  const double fl = std::floor(s);
  const int i0 = static_cast<int>(fl);
  const double f = s - fl;
  if (i0 < 0) return {{0, 0}, {1.0 - f, f}};
  if (i0 >= n - 1) return {{n - 1, n - 1}, {1.0 - f, f}};
  return {{i0, i0 + 1}, {1.0 - f, f}};
}

}  // namespace detail

// Cloud-in-cell deposition of rho and j, divided by cell volume, plus the
// Brinkman force: cell-centered against the cell-averaged fluid velocity
// (diagnostics) and face-staggered via the adjoint of the interpolation
// (the force actually applied to the fluid).
// Serial fixed-order accumulation: bit-deterministic.
inline KineticMoments deposit(const ParticleEnsemble& ens, const VectorField& u, const Grid& g) {
  const int dim = g.dim();
  if (ens.dim != dim) throw std::invalid_argument("deposit: dimension mismatch");
  KineticMoments m;
  m.rho = ScalarField(g);
  m.j.assign(dim, ScalarField(g));
  m.brinkman.assign(dim, ScalarField(g));
  m.brinkman_face = VectorField(g);

  const double inv_vol = 1.0 / g.cell_volume();
  const int jn = dim == 3 ? 2 : 1;
  for (size_t p = 0; p < ens.size(); ++p) {
    if (!ens.alive[p]) continue;
    const Vec pos = g.domain.wrap(ens.x[p]);
    detail::CicAxis ax = detail::cic_periodic(pos[0], g.hx, g.nx);
    detail::CicAxis ay{{0, 0}, {1.0, 0.0}};
    if (dim == 3) ay = detail::cic_periodic(pos[1], g.hy, g.ny);
    detail::CicAxis az = detail::cic_vertical(pos[dim - 1], g.hz, g.nz);

    const double wgt = ens.weight[p] * inv_vol;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < jn; ++dj)
        for (int di = 0; di < 2; ++di) {
          const double s = wgt * ax.w[di] * (dim == 3 ? ay.w[dj] : 1.0) * az.w[dk];
          if (s == 0.0) continue;
          const long idx = g.cidx(ax.lo[di], ay.lo[dj], az.lo[dk]);
          m.rho.values[idx] += s;
          for (int c = 0; c < dim; ++c) m.j[c].values[idx] += s * ens.v[p][c];
        }

    // Adjoint face deposit: gather u with the exact interpolation weights
    // (same ghost folding as hcomp_at), scatter w (v - u(x)) with the same
    // weights. Using one weight set for gather and scatter makes the drag
    // work identity exact whatever the rounding of the weights themselves.
    double diss = 0.0;
    for (int a = 0; a < dim - 1; ++a) {
      detail::AxisPos hax[3];
      for (int b = 0; b < dim - 1; ++b)
        hax[b] = detail::locate_periodic(pos[b], g.spacing(b), g.cells(b), b == a ? 0.0 : 0.5);
      const double sza = pos[dim - 1] / g.hz - 0.5;
      const double flz = std::floor(sza);
      const int k0 = static_cast<int>(flz);
      const double fz = sza - flz;
      long nidx[8];
      double nw[8];
      int cnt = 0;
      for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < jn; ++dj)
          for (int di = 0; di < 2; ++di) {
            const int i = pmod(hax[0].i0 + di, g.nx);
            const int j = dim == 3 ? pmod(hax[1].i0 + dj, g.ny) : 0;
            const double wx = di ? hax[0].frac : 1.0 - hax[0].frac;
            const double wy = dim == 3 ? (dj ? hax[1].frac : 1.0 - hax[1].frac) : 1.0;
            const double wz = dk ? fz : 1.0 - fz;
            double s = wx * wy * wz;
            int k = k0 + dk;
            if (k < 0) {  // odd no-slip ghost
              k = 0;
              s = -s;
            } else if (k >= g.nz) {  // even free-slip ghost
              k = g.nz - 1;
            }
            nidx[cnt] = g.cidx(i, j, k);
            nw[cnt++] = s;
          }
      double acc = 0.0;
      for (int q = 0; q < cnt; ++q) acc += nw[q] * u.comp[a][nidx[q]];
      const double r = ens.v[p][a] - acc;
      const double amount = wgt * r;
      for (int q = 0; q < cnt; ++q) m.brinkman_face.comp[a][nidx[q]] += nw[q] * amount;
      diss += r * r;
    }
    {
      const int a = dim - 1;
      detail::AxisPos hax[2];
      for (int b = 0; b < dim - 1; ++b)
        hax[b] = detail::locate_periodic(pos[b], g.spacing(b), g.cells(b), 0.5);
      const double sz = pos[a] / g.hz;
      int k0 = static_cast<int>(std::floor(sz));
      if (k0 >= g.nz) k0 = g.nz - 1;
      if (k0 < 0) k0 = 0;
      const double fz = sz - k0;
      long nidx[8];
      double nw[8];
      int cnt = 0;
      for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < jn; ++dj)
          for (int di = 0; di < 2; ++di) {
            const int i = pmod(hax[0].i0 + di, g.nx);
            const int j = dim == 3 ? pmod(hax[1].i0 + dj, g.ny) : 0;
            const double wx = di ? hax[0].frac : 1.0 - hax[0].frac;
            const double wy = dim == 3 ? (dj ? hax[1].frac : 1.0 - hax[1].frac) : 1.0;
            const double wz = dk ? fz : 1.0 - fz;
            nidx[cnt] = u.widx(i, j, k0 + dk);
            nw[cnt++] = wx * wy * wz;
          }
      double acc = 0.0;
      for (int q = 0; q < cnt; ++q) acc += nw[q] * u.comp[a][nidx[q]];
      const double r = ens.v[p][a] - acc;
      const double amount = wgt * r;
      for (int q = 0; q < cnt; ++q) m.brinkman_face.comp[a][nidx[q]] += nw[q] * amount;
      diss += r * r;
    }
    m.relative_dissipation += ens.weight[p] * diss;
  }

  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Vec uc = cell_average(u, i, j, k);
        const long idx = g.cidx(i, j, k);
        for (int c = 0; c < dim; ++c)
          m.brinkman[c].values[idx] = m.j[c].values[idx] - m.rho.values[idx] * uc[c];
      }
  return m;
}

// ---------------------------------------------------------------------------
// Particle push with absorption
// ---------------------------------------------------------------------------

// Advances every alive particle over dt by exponential sub-steps with u
// frozen at the start-of-substep position (extension by zero outside the
// strip). Crossings of z=0 are refined by bisection and the particle's mass
// moves to absorbed_mass; crossings of z=lz count as truncation loss.
inline void advance_particles(ParticleEnsemble& ens, const VectorField& u, double eps, double dt) {
  if (eps <= 0.0 || dt <= 0.0)
    throw std::invalid_argument("advance_particles: eps and dt must be positive");
  const Grid& g = u.grid;
  const int dim = g.dim();
  const double lz = g.domain.lz;
  const double hmin = g.min_spacing();

  for (size_t p = 0; p < ens.size(); ++p) {
    if (!ens.alive[p]) continue;
    PhasePoint pt{ens.x[p], ens.v[p]};
    double remaining = dt;
    while (remaining > 0.0) {
      const double speed = norm(pt.v, dim) + 1.0;
      const double sub = std::min({remaining, eps, hmin / speed});
      const Vec uf = extended_velocity(u, pt.x);
      PhasePoint next = push_exponential(pt, uf, eps, sub, dim);
      if (next.x[dim - 1] <= 0.0) {
        // Refined crossing time on the in-step closed form, then absorb.
        double lo = 0.0, hi = sub;
        while (hi - lo > 1e-12) {
          const double mid = 0.5 * (lo + hi);
          if (push_exponential(pt, uf, eps, mid, dim).x[dim - 1] > 0.0)
            lo = mid;
          else
            hi = mid;
        }
        ens.alive[p] = 0;
        ens.credit_absorbed(ens.weight[p]);
        pt = push_exponential(pt, uf, eps, 0.5 * (lo + hi), dim);
        break;
      }
      if (next.x[dim - 1] >= lz) {
        ens.alive[p] = 0;
        ens.credit_truncated(ens.weight[p]);
        pt = next;
        break;
      }
      pt = next;
      remaining -= sub;
    }
    pt.x = g.domain.wrap(pt.x);
    ens.x[p] = pt.x;
    ens.v[p] = pt.v;
  }
}

// Limit-system characteristics x' = u(x) - e_z (no inertia): RK2 midpoint
// trace, same absorbing wall and top truncation as the inertial push. Used
// with the same sampled ensemble and deposit as the kinetic runs, so the
// eps-sweep error against the limit is free of transport-discretization and
// sampling-noise mismatch.
inline void advance_tracers(ParticleEnsemble& ens, const VectorField& u, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("advance_tracers: dt must be positive");
  const Grid& g = u.grid;
  const int dim = g.dim();
  const double lz = g.domain.lz;
  for (size_t p = 0; p < ens.size(); ++p) {
    if (!ens.alive[p]) continue;
    const Vec x = ens.x[p];
    Vec vel = extended_velocity(u, x);
    vel[dim - 1] -= 1.0;
    Vec xm = x;
    for (int a = 0; a < dim; ++a) xm[a] += 0.5 * dt * vel[a];
    if (xm[dim - 1] >= 0.0 && xm[dim - 1] <= lz) {
      vel = extended_velocity(u, g.domain.wrap(xm));
      vel[dim - 1] -= 1.0;
    }
    Vec x1 = x;
    for (int a = 0; a < dim; ++a) x1[a] += dt * vel[a];
    if (x1[dim - 1] <= 0.0) {
      ens.alive[p] = 0;
      ens.credit_absorbed(ens.weight[p]);
      continue;
    }
    if (x1[dim - 1] >= lz) {
      ens.alive[p] = 0;
      ens.credit_truncated(ens.weight[p]);
      continue;
    }
    ens.x[p] = g.domain.wrap(x1);
  }
}

// CIC density alone (the limit run needs no current or drag force).
inline ScalarField deposit_density(const ParticleEnsemble& ens, const Grid& g) {
  const int dim = g.dim();
  if (ens.dim != dim) throw std::invalid_argument("deposit_density: dimension mismatch");
  ScalarField rho(g);
  const double inv_vol = 1.0 / g.cell_volume();
  for (size_t p = 0; p < ens.size(); ++p) {
    if (!ens.alive[p]) continue;
    const Vec pos = g.domain.wrap(ens.x[p]);
    detail::CicAxis ax = detail::cic_periodic(pos[0], g.hx, g.nx);
    detail::CicAxis ay{{0, 0}, {1.0, 0.0}};
    if (dim == 3) ay = detail::cic_periodic(pos[1], g.hy, g.ny);
    detail::CicAxis az = detail::cic_vertical(pos[dim - 1], g.hz, g.nz);
    const double wgt = ens.weight[p] * inv_vol;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < (dim == 3 ? 2 : 1); ++dj)
        for (int di = 0; di < 2; ++di) {
          const double s = wgt * ax.w[di] * (dim == 3 ? ay.w[dj] : 1.0) * az.w[dk];
          if (s == 0.0) continue;
          rho.values[g.cidx(ax.lo[di], ay.lo[dj], az.lo[dk])] += s;
        }
  }
  return rho;
}

// ---------------------------------------------------------------------------
// Snapshots: binary (count + packed records) and CSV.
// ---------------------------------------------------------------------------

inline void write_ensemble(const std::string& path, const ParticleEnsemble& ens) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  os.write("VNSP", 4);
  detail::put_u32(os, static_cast<uint32_t>(ens.dim));
  detail::put_u32(os, static_cast<uint32_t>(ens.size()));
  detail::put_f64(os, ens.absorbed_total());
  detail::put_f64(os, ens.truncated_total());
  detail::put_f64(os, ens.initial_mass);
  for (size_t i = 0; i < ens.size(); ++i) {
    for (int a = 0; a < ens.dim; ++a) detail::put_f64(os, ens.x[i][a]);
    for (int a = 0; a < ens.dim; ++a) detail::put_f64(os, ens.v[i][a]);
    detail::put_f64(os, ens.weight[i]);
    detail::put_f64(os, ens.alive[i] ? 1.0 : 0.0);
  }
}

inline ParticleEnsemble read_ensemble(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VNSP", 4) != 0) throw std::runtime_error("ensemble file: bad magic");
  ParticleEnsemble ens;
  ens.dim = static_cast<int>(detail::get_u32(is));
  const uint32_t n = detail::get_u32(is);
  ens.absorbed_mass = detail::get_f64(is);
  ens.truncation_loss = detail::get_f64(is);
  ens.initial_mass = detail::get_f64(is);
  ens.x.resize(n);
  ens.v.resize(n);
  ens.weight.resize(n);
  ens.alive.resize(n);
  for (uint32_t i = 0; i < n; ++i) {
    for (int a = 0; a < ens.dim; ++a) ens.x[i][a] = detail::get_f64(is);
    for (int a = 0; a < ens.dim; ++a) ens.v[i][a] = detail::get_f64(is);
    ens.weight[i] = detail::get_f64(is);
    ens.alive[i] = detail::get_f64(is) != 0.0 ? 1 : 0;
  }
  if (!is) throw std::runtime_error("ensemble file: truncated");
  return ens;
}

inline void write_ensemble_csv(const std::string& path, const ParticleEnsemble& ens) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  os << (ens.dim == 2 ? "x,z,vx,vz,weight,alive\n" : "x,y,z,vx,vy,vz,weight,alive\n");
  char buf[256];
  for (size_t i = 0; i < ens.size(); ++i) {
    int off = 0;
    for (int a = 0; a < ens.dim; ++a)
      off += std::snprintf(buf + off, sizeof buf - off, "%.17g,", ens.x[i][a]);
    for (int a = 0; a < ens.dim; ++a)
      off += std::snprintf(buf + off, sizeof buf - off, "%.17g,", ens.v[i][a]);
    std::snprintf(buf + off, sizeof buf - off, "%.17g,%d\n", ens.weight[i], ens.alive[i] ? 1 : 0);
    os << buf;
  }
}

}  // namespace vnsim
