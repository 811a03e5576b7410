#pragma once

#include <cmath>
#include <stdexcept>

#include "vnsim/field.hpp"

namespace vnsim {

inline int pmod(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

namespace detail {

// Value of horizontal component a at logical vertical index k, where k may be
// -1 (no-slip ghost below the wall, odd reflection so the interpolant
// vanishes at z=0) or nz (free-slip ghost above the top, even reflection).
inline double hcomp_at(const VectorField& f, int a, int i, int j, int k) {
  const Grid& g = f.grid;
  if (k < 0) return -f.comp[a][g.cidx(i, j, 0)];
  if (k >= g.nz) return f.comp[a][g.cidx(i, j, g.nz - 1)];
  return f.comp[a][g.cidx(i, j, k)];
}

struct AxisPos {
  int i0;
  double frac;
};

// Locate x on a periodic axis sampled at offset*h + i*h, i = 0..n-1.
inline AxisPos locate_periodic(double x, double h, int n, double offset) {
  const double s = x / h - offset;
  const double fl = std::floor(s);
  return {pmod(static_cast<int>(fl), n), s - fl};
}

}  // namespace detail

// Staggering-aware bilinear/trilinear interpolation of a MAC field.
// Horizontal coordinates wrap periodically; z must lie in [0, lz]. At z=0
// every component evaluates to exactly 0 when the field satisfies the
// no-slip wall (stored w-row is 0; horizontal components pass through 0 by
// the odd ghost).
inline Vec interpolate(const VectorField& f, Vec x) {
  const Grid& g = f.grid;
  const int dim = g.dim();
  if (!(x[dim - 1] >= 0.0 && x[dim - 1] <= g.domain.lz))
    throw std::domain_error("interpolate: z outside [0, lz]");
  x = g.domain.wrap(x);

  Vec out{0.0, 0.0, 0.0};

  // Horizontal components: faces along their own axis, centers elsewhere.
  for (int a = 0; a < dim - 1; ++a) {
    detail::AxisPos ax[3];
    for (int b = 0; b < dim - 1; ++b)
      ax[b] = detail::locate_periodic(x[b], g.spacing(b), g.cells(b), b == a ? 0.0 : 0.5);
    // Vertical: centers, ghost handled by hcomp_at.
    const double sz = x[dim - 1] / g.hz - 0.5;
    const double flz = std::floor(sz);
    const int k0 = static_cast<int>(flz);
    const double fz = sz - flz;

    double acc = 0.0;
    const int jn = dim == 3 ? 2 : 1;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < jn; ++dj)
        for (int di = 0; di < 2; ++di) {
          const int i = pmod(ax[0].i0 + di, g.nx);
          const int j = dim == 3 ? pmod(ax[1].i0 + dj, g.ny) : 0;
          const double wx = di ? ax[0].frac : 1.0 - ax[0].frac;
          const double wy = dim == 3 ? (dj ? ax[1].frac : 1.0 - ax[1].frac) : 1.0;
          const double wz = dk ? fz : 1.0 - fz;
          acc += wx * wy * wz * detail::hcomp_at(f, a, i, j, k0 + dk);
        }
    out[a] = acc;
  }

  // Vertical component: faces in z (both wall rows stored), centers in x,y.
  {
    detail::AxisPos ax[2];
    for (int b = 0; b < dim - 1; ++b)
      ax[b] = detail::locate_periodic(x[b], g.spacing(b), g.cells(b), 0.5);
    double sz = x[dim - 1] / g.hz;
    int k0 = static_cast<int>(std::floor(sz));
    if (k0 >= g.nz) k0 = g.nz - 1;  // z == lz lands on the top face
    if (k0 < 0) k0 = 0;
    const double fz = sz - k0;

    double acc = 0.0;
    const int jn = dim == 3 ? 2 : 1;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < jn; ++dj)
        for (int di = 0; di < 2; ++di) {
          const int i = pmod(ax[0].i0 + di, g.nx);
          const int j = dim == 3 ? pmod(ax[1].i0 + dj, g.ny) : 0;
          const double wx = di ? ax[0].frac : 1.0 - ax[0].frac;
          const double wy = dim == 3 ? (dj ? ax[1].frac : 1.0 - ax[1].frac) : 1.0;
          const double wz = dk ? fz : 1.0 - fz;
          acc += wx * wy * wz * f.comp[dim - 1][f.widx(i, j, k0 + dk)];
        }
    out[dim - 1] = acc;
  }
  return out;
}

// Fluid velocity seen by a particle: the extension of u by zero outside the
// strip (operator P), so pushes remain defined while a crossing is being
// resolved.
inline Vec extended_velocity(const VectorField& f, const Vec& x) {
  if (x[f.dim() - 1] < 0.0 || x[f.dim() - 1] > f.grid.domain.lz) return {0.0, 0.0, 0.0};
  return interpolate(f, x);
}

// Centered MAC divergence, one value per cell; second-order accurate.
inline ScalarField discrete_div(const VectorField& f) {
  const Grid& g = f.grid;
  ScalarField d(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        double s = (f.u(pmod(i + 1, g.nx), j, k) - f.u(i, j, k)) / g.hx;
        if (g.dim() == 3) s += (f.v(i, pmod(j + 1, g.ny), k) - f.v(i, j, k)) / g.hy;
        s += (f.w(i, j, k + 1) - f.w(i, j, k)) / g.hz;
        d.at(i, j, k) = s;
      }
  return d;
}

// Cell-centered scalar -> MAC gradient, homogeneous Neumann at both z-walls
// (wall faces get 0). Compatible with discrete_div: their composition is the
// standard 5/7-point Laplacian.
inline VectorField discrete_grad(const ScalarField& p) {
  const Grid& g = p.grid;
  VectorField grad(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        grad.u(i, j, k) = (p.at(i, j, k) - p.at(pmod(i - 1, g.nx), j, k)) / g.hx;
  if (g.dim() == 3)
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          grad.v(i, j, k) = (p.at(i, j, k) - p.at(i, pmod(j - 1, g.ny), k)) / g.hy;
  for (int k = 1; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        grad.w(i, j, k) = (p.at(i, j, k) - p.at(i, j, k - 1)) / g.hz;
  return grad;
}

// Average the MAC components of f to the cell center (i,j,k).
inline Vec cell_average(const VectorField& f, int i, int j, int k) {
  const Grid& g = f.grid;
  Vec c{0.0, 0.0, 0.0};
  c[0] = 0.5 * (f.u(i, j, k) + f.u(pmod(i + 1, g.nx), j, k));
  if (g.dim() == 3) c[1] = 0.5 * (f.v(i, j, k) + f.v(i, pmod(j + 1, g.ny), k));
  c[g.dim() - 1] = 0.5 * (f.w(i, j, k) + f.w(i, j, k + 1));
  return c;
}

// Cell-centered vector samples -> MAC faces (arithmetic mean of the two
// adjacent cells; pinned wall rows of the vertical component stay 0).
inline VectorField centers_to_faces(const std::vector<ScalarField>& cc, const Grid& g) {
  VectorField f(g);
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        f.u(i, j, k) = 0.5 * (cc[0].at(pmod(i - 1, g.nx), j, k) + cc[0].at(i, j, k));
  if (g.dim() == 3)
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          f.v(i, j, k) = 0.5 * (cc[1].at(i, pmod(j - 1, g.ny), k) + cc[1].at(i, j, k));
  for (int k = 1; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        f.w(i, j, k) = 0.5 * (cc[g.dim() - 1].at(i, j, k - 1) + cc[g.dim() - 1].at(i, j, k));
  return f;
}

// L2 norm of the MAC gradient of every component, ghost rows as in the
// viscous operator (odd at the no-slip wall, even at the free-slip top).
inline double grad_l2_norm_sq(const VectorField& f) {
  const Grid& g = f.grid;
  double s = 0.0;
  for (int a = 0; a < g.dim() - 1; ++a) {
    for (int k = 0; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double c = f.comp[a][g.cidx(i, j, k)];
          const double dx = (f.comp[a][g.cidx(pmod(i + 1, g.nx), j, k)] - c) / g.hx;
          s += dx * dx;
          if (g.dim() == 3) {
            const double dy = (f.comp[a][g.cidx(i, pmod(j + 1, g.ny), k)] - c) / g.hy;
            s += dy * dy;
          }
        }
    // Vertical derivative at the nz+1 horizontal interfaces, ghosts at both walls.
    for (int k = 0; k <= g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
          const double dz =
              (detail::hcomp_at(f, a, i, j, k) - detail::hcomp_at(f, a, i, j, k - 1)) / g.hz;
          s += dz * dz;
        }
  }
  const int vz = g.dim() - 1;
  for (int k = 0; k <= g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const double c = f.comp[vz][f.widx(i, j, k)];
        const double dx = (f.comp[vz][f.widx(pmod(i + 1, g.nx), j, k)] - c) / g.hx;
        s += dx * dx;
        if (g.dim() == 3) {
          const double dy = (f.comp[vz][f.widx(i, pmod(j + 1, g.ny), k)] - c) / g.hy;
          s += dy * dy;
        }
        if (k < g.nz) {
          const double dz = (f.comp[vz][f.widx(i, j, k + 1)] - c) / g.hz;
          s += dz * dz;
        }
      }
  return s * g.cell_volume();
}

}  // namespace vnsim
