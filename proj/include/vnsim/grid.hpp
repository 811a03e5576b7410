#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace vnsim {

// Small fixed-capacity vector used for positions/velocities. Only the first
// `dim` components are meaningful; the rest stay zero.
using Vec = std::array<double, 3>;

inline Vec vec2(double x, double z) { return {x, z, 0.0}; }
inline Vec vec3(double x, double y, double z) { return {x, y, z}; }

inline double norm(const Vec& v, int dim) {
  double s = 0.0;
  for (int a = 0; a < dim; ++a) s += v[a] * v[a];
  return std::sqrt(s);
}

// Horizontally periodic strip {0 < z < lz}. The absorbing/no-slip wall is
// z = 0 (outward normal -e_z); z = lz is an impermeable free-slip truncation
// of the unbounded half-space.
struct StripDomain {
  int dim = 2;            // 2: coordinates (x,z); 3: (x,y,z)
  double lx = 1.0;        // periodic extent along x
  double ly = 1.0;        // periodic extent along y (dim == 3 only)
  double lz = 1.0;        // wall at z=0, truncation at z=lz

  StripDomain() = default;
  StripDomain(int d, double Lx, double Ly, double Lz) : dim(d), lx(Lx), ly(Ly), lz(Lz) {
    validate();
  }
  static StripDomain square2d(double Lx, double Lz) { return StripDomain(2, Lx, 1.0, Lz); }

  void validate() const {
    if (dim != 2 && dim != 3) throw std::invalid_argument("StripDomain: dim must be 2 or 3");
    if (lx <= 0 || lz <= 0 || (dim == 3 && ly <= 0))
      throw std::invalid_argument("StripDomain: extents must be positive");
  }

  double horizontal_extent(int axis) const { return axis == 0 ? lx : ly; }

  // Wraps the horizontal coordinates into [0, extent); z untouched.
  Vec wrap(Vec x) const {
    for (int a = 0; a < dim - 1; ++a) {
      const double L = horizontal_extent(a);
      x[a] -= L * std::floor(x[a] / L);
      if (x[a] >= L) x[a] -= L;  // floor rounding at the seam
    }
    return x;
  }

  bool inside_vertical(double z) const { return z >= 0.0 && z <= lz; }
};

// Uniform MAC grid on the strip: scalars at cell centers, velocity
// components at faces. In 2D ny == 1 and the y metadata is inert.
struct Grid {
  StripDomain domain;
  int nx = 1, ny = 1, nz = 1;
  double hx = 1.0, hy = 1.0, hz = 1.0;

  Grid() = default;
  Grid(const StripDomain& dom, int cx, int cy, int cz) : domain(dom), nx(cx), ny(cy), nz(cz) {
    if (dom.dim == 2) ny = 1;
    if (nx < 1 || ny < 1 || nz < 1) throw std::invalid_argument("Grid: cell counts must be >= 1");
    hx = dom.lx / nx;
    hy = dom.dim == 3 ? dom.ly / ny : 1.0;
    hz = dom.lz / nz;
  }
  static Grid make2d(double Lx, double Lz, int cx, int cz) {
    return Grid(StripDomain::square2d(Lx, Lz), cx, 1, cz);
  }

  int dim() const { return domain.dim; }
  long cell_count() const { return static_cast<long>(nx) * ny * nz; }
  double cell_volume() const { return dim() == 3 ? hx * hy * hz : hx * hz; }
  double spacing(int axis) const { return axis == 0 ? hx : (axis == dim() - 1 ? hz : hy); }
  int cells(int axis) const { return axis == 0 ? nx : (axis == dim() - 1 ? nz : ny); }
  double min_spacing() const {
    double h = std::min(hx, hz);
    if (dim() == 3) h = std::min(h, hy);
    return h;
  }

  // Cell-centered collocation point of cell (i,j,k).
  Vec center(int i, int j, int k) const {
    if (dim() == 2) return vec2((i + 0.5) * hx, (k + 0.5) * hz);
    return vec3((i + 0.5) * hx, (j + 0.5) * hy, (k + 0.5) * hz);
  }

  long cidx(int i, int j, int k) const { return (static_cast<long>(k) * ny + j) * nx + i; }

  bool same_layout(const Grid& o) const {
    return domain.dim == o.domain.dim && nx == o.nx && ny == o.ny && nz == o.nz &&
           domain.lx == o.domain.lx && domain.ly == o.domain.ly && domain.lz == o.domain.lz;
  }
};

}  // namespace vnsim
