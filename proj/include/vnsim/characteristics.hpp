#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "vnsim/ops.hpp"

namespace vnsim {

struct PhasePoint {
  Vec x{0.0, 0.0, 0.0};
  Vec v{0.0, 0.0, 0.0};
};

struct ExitTimes {
  double backward = -std::numeric_limits<double>::infinity();
  double forward = std::numeric_limits<double>::infinity();
};

// One relaxation step of the gravity-only flow: velocities contract toward
// the terminal value -e_z at rate 1/eps while the position integrates the
// closed form. Exact to rounding for any dt.
inline PhasePoint free_flow(const PhasePoint& p, double eps, double dt, int dim) {
  if (eps <= 0.0) throw std::invalid_argument("free_flow: eps must be positive");
  const double decay = std::exp(-dt / eps);
  const double a = -std::expm1(-dt / eps);  // 1 - e^{-dt/eps}, accurate for dt << eps
  PhasePoint q;
  const int vz = dim - 1;
  for (int c = 0; c < dim; ++c) {
    const double gz = c == vz ? 1.0 : 0.0;  // gravity acts on the vertical axis only
    q.v[c] = decay * (p.v[c] + gz) - gz;
    q.x[c] = p.x[c] + eps * a * (p.v[c] + gz) - dt * gz;
  }
  return q;
}

// Exponential push with the fluid velocity frozen at u_at_p over the step.
// Exact when u is constant along the trajectory; first-order accurate in dt
// otherwise, uniformly in eps.
inline PhasePoint push_exponential(const PhasePoint& p, const Vec& u_at_p, double eps, double dt,
                                   int dim) {
  if (eps <= 0.0) throw std::invalid_argument("push_exponential: eps must be positive");
  const double decay = std::exp(-dt / eps);
  const double a = -std::expm1(-dt / eps);
  PhasePoint q;
  const int vz = dim - 1;
  for (int c = 0; c < dim; ++c) {
    const double drift = u_at_p[c] - (c == vz ? 1.0 : 0.0);  // u - e_z
    q.v[c] = decay * p.v[c] + a * drift;
    q.x[c] = p.x[c] + eps * a * p.v[c] + (dt - eps * a) * drift;
  }
  return q;
}

// Phase-space Jacobian e^{d*dt/eps} of the backward-forward flow map.
// Diagnostics only; particle weights already carry the conserved measure.
inline double velocity_jacobian(double eps, double dt, int dim) {
  if (eps <= 0.0) throw std::invalid_argument("velocity_jacobian: eps must be positive");
  const double arg = dim * dt / eps;
  if (arg > 709.0) return std::numeric_limits<double>::infinity();
  return std::exp(arg);
}

// Height along the gravity-only flow after time t.
inline double free_height(double z0, double vz0, double eps, double t) {
  return z0 + eps * (-std::expm1(-t / eps)) * (vz0 + 1.0) - t;
}

// Smallest t > 0 with free_height(z0,vz0,eps,t) = 0, by bracketing and
// bisection to absolute tolerance 1e-12. Always finite: the height
// eventually decreases with slope -1.
inline double exit_time_free(double z0, double vz0, double eps) {
  if (z0 <= 0.0) throw std::invalid_argument("exit_time_free: z0 must be positive");
  if (eps <= 0.0) throw std::invalid_argument("exit_time_free: eps must be positive");
  // The vertical velocity is monotone, so the height has at most one interior
  // maximum, at t = eps*log(1+vz0) when vz0 > 0. The root is unique past it.
  double lo = vz0 > 0.0 ? eps * std::log1p(vz0) : 0.0;
  double hi = z0 + eps * (1.0 + std::max(vz0, 0.0)) + 1.0;
  while (free_height(z0, vz0, eps, hi) >= 0.0) hi *= 2.0;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (free_height(z0, vz0, eps, mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

// Enlargement functions of the free-flow exit geometry:
//   l(s) = (s - eps(1-e^{-s/eps}))/2 - L,  r(s) = (s/(eps(1-e^{-s/eps})) - 1)/2 - R.
struct EgcBounds {
  double l = 0.0;
  double r = 0.0;
};

inline EgcBounds egc_bounds(double eps, double L, double R, double s) {
  if (s <= 0.0 || eps <= 0.0) throw std::invalid_argument("egc_bounds: s and eps must be positive");
  const double a = -std::expm1(-s / eps);
  return {0.5 * (s - eps * a) - L, 0.5 * (s / (eps * a) - 1.0) - R};
}

// Threshold below which an exit condition certified for eps0 transfers to a
// smaller friction parameter.
inline double egc_transfer_eps_bound(double eps0) {
  if (eps0 <= 0.0) throw std::invalid_argument("egc_transfer_eps_bound: eps0 must be positive");
  return eps0 / (2.0 * eps0 + 1.0);
}

// Free-flow exit horizon for the box (0,L) x B(0,R).
inline double free_exit_horizon(double eps, double L, double R) { return L + eps * (1.0 + R); }

// ---------------------------------------------------------------------------
// Exit geometric condition on a sampled phase-space box.
// ---------------------------------------------------------------------------

// Piecewise-constant-in-time velocity snapshots. An empty series is the
// trivial (zero) field.
struct FieldSeries {
  std::vector<double> times;
  std::vector<VectorField> fields;
  double max_gap = 0.0;  // > 0: enforce this bound on consecutive snapshot gaps

  bool trivial() const { return fields.empty(); }

  static FieldSeries zero_field() { return {}; }

  void validate(double horizon) const {
    if (trivial()) return;
    if (times.size() != fields.size())
      throw std::invalid_argument("FieldSeries: times/fields size mismatch");
    if (times.front() > 1e-12) throw std::invalid_argument("FieldSeries: must start at t=0");
    for (size_t i = 1; i < times.size(); ++i) {
      if (times[i] <= times[i - 1]) throw std::invalid_argument("FieldSeries: times not increasing");
      if (max_gap > 0.0 && times[i] - times[i - 1] > max_gap * (1.0 + 1e-9))
        throw std::invalid_argument("FieldSeries: gap in time series");
    }
    (void)horizon;  // last snapshot extends to the horizon
  }

  const VectorField& at_time(double t) const {
    size_t i = 0;
    while (i + 1 < times.size() && times[i + 1] <= t) ++i;
    return fields[i];
  }
};

struct EgcQuery {
  double L = 1.0;       // height of the sampled slab
  double R = 1.0;       // velocity-ball radius
  double T = 1.0;       // horizon
  double eps = 1.0;     // friction parameter
  int samples = 9;      // sampling resolution per axis
  int dim = 2;

  void validate() const {
    if (L <= 0 || R <= 0 || T <= 0 || eps <= 0)
      throw std::invalid_argument("EgcQuery: L, R, T, eps must be positive");
    if (samples < 2) throw std::invalid_argument("EgcQuery: need >= 2 samples per axis");
    if (dim != 2 && dim != 3) throw std::invalid_argument("EgcQuery: dim must be 2 or 3");
  }
};

struct EgcResult {
  bool satisfied = false;
  double worst_exit_time = std::numeric_limits<double>::infinity();
  PhasePoint worst_sample;
  long samples = 0;
  EgcQuery query;
};

namespace detail {

// Exit time of one trajectory under the piecewise-frozen exponential push,
// integrated to the horizon. Crossings of z=0 are refined by bisection on
// the in-step closed form. Returns nullopt if the sample has not exited.
inline std::optional<double> trace_exit_time(PhasePoint p, const FieldSeries& series,
                                             const EgcQuery& q, double substep_cap) {
  const int dim = q.dim;
  double t = 0.0;
  while (t < q.T + 1e-13) {
    const Vec u = series.trivial() ? Vec{0.0, 0.0, 0.0}
                                   : extended_velocity(series.at_time(t), p.x);
    double dt = std::min(q.eps, substep_cap);
    // Do not step across a snapshot boundary: u is frozen per sub-step.
    if (!series.trivial()) {
      for (double ts : series.times)
        if (ts > t + 1e-13 && ts < t + dt) dt = ts - t;
    }
    dt = std::min(dt, q.T + 1e-12 - t);
    if (dt <= 0.0) break;
    const PhasePoint next = push_exponential(p, u, q.eps, dt, dim);
    if (next.x[dim - 1] < 0.0) {
      // Refine the crossing on the frozen-u closed form.
      double lo = 0.0, hi = dt;
      while (hi - lo > 1e-12) {
        const double mid = 0.5 * (lo + hi);
        if (push_exponential(p, u, q.eps, mid, dim).x[dim - 1] > 0.0)
          lo = mid;
        else
          hi = mid;
      }
      return t + 0.5 * (lo + hi);
    }
    p = next;
    t += dt;
  }
  return std::nullopt;
}

}  // namespace detail

// Checks the exit geometric condition by forward integration from a tensor
// grid of samples: heights in (0,L], velocities cell-centered inside the
// open ball B(0,R), horizontal positions across one period (they matter only
// for a nontrivial field). satisfied == true iff every sampled trajectory
// crosses z=0 strictly before T.
inline EgcResult egc_check(const FieldSeries& series, const EgcQuery& q) {
  q.validate();
  series.validate(q.T);
  const int n = q.samples;
  const int dim = q.dim;

  double substep_cap = q.T;  // exact for frozen u; cap by the grid scale otherwise
  double hmin = 0.0;
  if (!series.trivial()) hmin = series.fields.front().grid.min_spacing();

  std::vector<double> vgrid(n);
  for (int i = 0; i < n; ++i) vgrid[i] = -q.R + 2.0 * q.R * (i + 0.5) / n;

  const int nh = series.trivial() ? 1 : n;  // horizontal samples
  double hx = 1.0, hy = 1.0;
  if (!series.trivial()) {
    hx = series.fields.front().grid.domain.lx;
    hy = series.fields.front().grid.domain.ly;
  }

  EgcResult res;
  res.query = q;
  res.worst_exit_time = -std::numeric_limits<double>::infinity();
  bool all_exited = true;
  bool have_worst = false;

  const int nvy = dim == 3 ? n : 1;
  const int nhy = dim == 3 ? nh : 1;
  for (int iz = 0; iz < n; ++iz) {
    const double z0 = q.L * (iz + 1) / n;
    for (int ihx = 0; ihx < nh; ++ihx)
      for (int ihy = 0; ihy < nhy; ++ihy)
        for (int ivx = 0; ivx < n; ++ivx)
          for (int ivy = 0; ivy < nvy; ++ivy)
            for (int ivz = 0; ivz < n; ++ivz) {
              PhasePoint p;
              p.x[0] = hx * (ihx + 0.5) / nh;
              if (dim == 3) p.x[1] = hy * (ihy + 0.5) / nh;
              p.x[dim - 1] = z0;
              p.v[0] = vgrid[ivx];
              if (dim == 3) p.v[1] = vgrid[ivy];
              p.v[dim - 1] = vgrid[ivz];
              if (norm(p.v, dim) >= q.R) continue;  // sample the open ball only
              ++res.samples;

              double cap = substep_cap;
              if (hmin > 0.0) {
                const double vmax = std::max(norm(p.v, dim) + 1.0, 1.0);
                cap = hmin / vmax;
              }
              const auto exit = detail::trace_exit_time(p, series, q, cap);
              // Worst-sample reduction in deterministic sample order: strict
              // comparison keeps the first (lexicographically smallest) of ties.
              if (!exit) {
                if (all_exited) {
                  all_exited = false;
                  res.worst_exit_time = std::numeric_limits<double>::infinity();
                  res.worst_sample = p;
                  have_worst = true;
                }
              } else if (all_exited && (!have_worst || *exit > res.worst_exit_time)) {
                res.worst_exit_time = *exit;
                res.worst_sample = p;
                have_worst = true;
              }
            }
  }
  res.satisfied = all_exited && res.worst_exit_time < q.T;
  return res;
}

}  // namespace vnsim
