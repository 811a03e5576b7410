#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnsim/grid.hpp"

namespace vnsim {

// Cell-centered scalar samples (densities, pressure, moments).
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g) : grid(g), values(g.cell_count(), 0.0) {}

  double& at(int i, int j, int k) { return values[grid.cidx(i, j, k)]; }
  double at(int i, int j, int k) const { return values[grid.cidx(i, j, k)]; }

  // Compensated (Neumaier) sum: mass ledgers compare this against absorbed
  // totals at 1e-12 relative, so plain accumulation over ~1e5 cells is too
  // lossy.
  double integral() const {
    double s = 0.0, c = 0.0;
    for (double v : values) {
      const double t = s + v;
      c += std::abs(s) >= std::abs(v) ? (s - t) + v : (v - t) + s;
      s = t;
    }
    return (s + c) * grid.cell_volume();
  }
  double l2_norm() const {
    double s = 0.0;
    for (double v : values) s += v * v;
    return std::sqrt(s * grid.cell_volume());
  }
  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

// MAC-staggered vector field. Component a < dim-1 lives on the faces normal
// to the horizontal axis a (same array shape as cell centers, periodic);
// the vertical component lives on horizontal faces z = k*hz, k = 0..nz,
// including both wall rows.
struct VectorField {
  Grid grid;
  std::vector<std::vector<double>> comp;

  VectorField() = default;
  explicit VectorField(const Grid& g) : grid(g) {
    comp.resize(g.dim());
    for (int a = 0; a < g.dim() - 1; ++a) comp[a].assign(g.cell_count(), 0.0);
    comp[g.dim() - 1].assign(static_cast<long>(g.nx) * g.ny * (g.nz + 1), 0.0);
  }

  int dim() const { return grid.dim(); }
  int vertical() const { return grid.dim() - 1; }

  long widx(int i, int j, int k) const { return (static_cast<long>(k) * grid.ny + j) * grid.nx + i; }

  double& u(int i, int j, int k) { return comp[0][grid.cidx(i, j, k)]; }
  double u(int i, int j, int k) const { return comp[0][grid.cidx(i, j, k)]; }
  double& v(int i, int j, int k) { return comp[1][grid.cidx(i, j, k)]; }
  double v(int i, int j, int k) const { return comp[1][grid.cidx(i, j, k)]; }
  double& w(int i, int j, int k) { return comp[vertical()][widx(i, j, k)]; }
  double w(int i, int j, int k) const { return comp[vertical()][widx(i, j, k)]; }

  // Discrete L2 norm: face values weighted by one cell volume each (wall and
  // top w-rows are pinned to zero and carry no energy).
  double l2_norm_sq() const {
    double s = 0.0;
    for (const auto& c : comp)
      for (double x : c) s += x * x;
    return s * grid.cell_volume();
  }
  double max_abs() const {
    double m = 0.0;
    for (const auto& c : comp)
      for (double x : c) m = std::max(m, std::abs(x));
    return m;
  }
};

// ---------------------------------------------------------------------------
// Serialization. Binary layout (little-endian):
//   magic "VNSF", u32 kind (0 scalar, 1 vector), u32 dim,
//   u32 nx, ny, nz, f64 lx, ly, lz,
//   then each component: u32 count, f64 payload in storage order.
// ---------------------------------------------------------------------------

namespace detail {
inline void put_u32(std::ofstream& os, uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); }
inline void put_f64(std::ofstream& os, double v) { os.write(reinterpret_cast<const char*>(&v), 8); }
inline uint32_t get_u32(std::ifstream& is) {
  uint32_t v;
  is.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
inline double get_f64(std::ifstream& is) {
  double v;
  is.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
inline void write_header(std::ofstream& os, const Grid& g, uint32_t kind) {
  os.write("VNSF", 4);
  put_u32(os, kind);
  put_u32(os, static_cast<uint32_t>(g.dim()));
  put_u32(os, static_cast<uint32_t>(g.nx));
  put_u32(os, static_cast<uint32_t>(g.ny));
  put_u32(os, static_cast<uint32_t>(g.nz));
  put_f64(os, g.domain.lx);
  put_f64(os, g.domain.ly);
  put_f64(os, g.domain.lz);
}
inline Grid read_header(std::ifstream& is, uint32_t expect_kind) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "VNSF", 4) != 0)
    throw std::runtime_error("field file: bad magic");
  const uint32_t kind = get_u32(is);
  if (kind != expect_kind) throw std::runtime_error("field file: wrong kind");
  const int dim = static_cast<int>(get_u32(is));
  const int nx = static_cast<int>(get_u32(is));
  const int ny = static_cast<int>(get_u32(is));
  const int nz = static_cast<int>(get_u32(is));
  const double lx = get_f64(is);
  const double ly = get_f64(is);
  const double lz = get_f64(is);
  return Grid(StripDomain(dim, lx, ly, lz), nx, ny, nz);
}
inline void write_block(std::ofstream& os, const std::vector<double>& v) {
  put_u32(os, static_cast<uint32_t>(v.size()));
  os.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * 8));
}
inline void read_block(std::ifstream& is, std::vector<double>& v) {
  const uint32_t n = get_u32(is);
  v.resize(n);
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n) * 8);
  if (!is) throw std::runtime_error("field file: truncated payload");
}
}  // namespace detail

inline void write_field(const std::string& path, const ScalarField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  detail::write_header(os, f.grid, 0);
  detail::write_block(os, f.values);
}

inline ScalarField read_scalar_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  ScalarField f(detail::read_header(is, 0));
  detail::read_block(is, f.values);
  return f;
}

inline void write_field(const std::string& path, const VectorField& f) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path);
  detail::write_header(os, f.grid, 1);
  for (const auto& c : f.comp) detail::write_block(os, c);
}

inline VectorField read_vector_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path);
  VectorField f(detail::read_header(is, 1));
  for (auto& c : f.comp) detail::read_block(is, c);
  return f;
}

// CSV export for plotting: one row per cell center, columns x[,y],z,value...
inline void write_csv(const std::string& path, const ScalarField& f) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path);
  const Grid& g = f.grid;
  os << (g.dim() == 2 ? "x,z,value\n" : "x,y,z,value\n");
  char buf[128];
  for (int k = 0; k < g.nz; ++k)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const Vec c = g.center(i, j, k);
        if (g.dim() == 2)
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", c[0], c[1], f.at(i, j, k));
        else
          std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", c[0], c[1], c[2],
                        f.at(i, j, k));
        os << buf;
      }
}

}  // namespace vnsim
