#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vnsim/fluid.hpp"
#include "vnsim/kinetic.hpp"

namespace vnsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Scenario description: INI-style key=value file with dotted keys, full
// defaulting, '#' comments. Every effective value is echoed into the run
// manifest so runs are self-describing.
struct ScenarioConfig {
  int dim = 2;
  double lx = 1.0, ly = 1.0, lz = 1.0;
  int nx = 64, ny = 1, nz = 64;

  double t_final = 2.0;
  double dt = 0.0;  // 0: derived from the CFL factor and the initial state
  double cfl = 0.9;

  double fluid_amplitude = 0.05;  // streamfunction amplitude of the initial vortex
  std::string advection = "skew";  // skew | upwind
  bool implicit_diffusion = false;
  double projection_tol = 1e-10;

  double eps = 0.1;
  long particle_count = 20000;
  double blob_mass = 1.0;
  double temperature = 0.02;
  double center_x = 0.5, center_y = 0.5, center_z = 0.6;
  double width_x = 0.2, width_y = 0.2, width_z = 0.2;
  bool mean_from_fluid = true;

  std::vector<double> eps_list{0.4, 0.2, 0.1, 0.05};
  double theta_coeff = 0.1;  // sweep temperature = theta_coeff * eps

  int checkpoint_count = 25;
  uint64_t seed = 12345;
  std::string output_dir = "out";

  StripDomain domain() const { return StripDomain(dim, lx, ly, lz); }
  Grid grid() const { return Grid(domain(), nx, ny, nz); }

  FluidOptions fluid_options() const {
    FluidOptions o;
    o.advection = advection == "upwind" ? AdvectionScheme::upwind2 : AdvectionScheme::skew_symmetric;
    o.implicit_diffusion = implicit_diffusion;
    o.projection_tol = projection_tol;
    o.cfl_factor = cfl;
    return o;
  }

  InitialKineticSpec kinetic_spec() const {
    InitialKineticSpec s;
    s.center = dim == 3 ? vec3(center_x, center_y, center_z) : vec2(center_x, center_z);
    s.half_width = dim == 3 ? vec3(width_x, width_y, width_z) : vec2(width_x, width_z);
    s.mass = blob_mass;
    s.temperature = temperature;
    s.mean_from_fluid = mean_from_fluid;
    return s;
  }

  // Fixed step: explicit diffusion limit unless overridden; advective
  // violations during the run abort (no adaptive stepping, for determinism).
  double step_size() const {
    if (dt > 0.0) return dt;
    const Grid g = grid();
    const double h = g.min_spacing();
    return cfl * h * h / (2.0 * g.dim());
  }

  // Checkpoint times, geometric in (1+t) so log-log fits are
  // well-conditioned.
  std::vector<double> checkpoint_times() const {
    std::vector<double> ts(checkpoint_count);
    for (int i = 0; i < checkpoint_count; ++i)
      ts[i] = std::pow(1.0 + t_final, static_cast<double>(i) / (checkpoint_count - 1)) - 1.0;
    ts.back() = t_final;
    return ts;
  }

  void validate() const {
    if (dim != 2 && dim != 3) throw ConfigError("domain.dim must be 2 or 3");
    if (lx <= 0 || lz <= 0 || (dim == 3 && ly <= 0)) throw ConfigError("extents must be positive");
    if (nx < 2 || nz < 2 || (dim == 3 && ny < 2)) throw ConfigError("grid too coarse");
    if (t_final <= 0) throw ConfigError("time.t_final must be positive");
    if (dt < 0 || cfl <= 0 || cfl > 1) throw ConfigError("bad time.dt or time.cfl");
    if (advection != "skew" && advection != "upwind")
      throw ConfigError("fluid.advection must be skew or upwind");
    if (eps <= 0) throw ConfigError("kinetic.eps must be positive");
    if (particle_count < 0) throw ConfigError("kinetic.count must be >= 0");
    if (blob_mass <= 0 || temperature < 0) throw ConfigError("bad kinetic mass/temperature");
    if (checkpoint_count < 2) throw ConfigError("checkpoints.count must be >= 2");
    if (eps_list.size() >= 2)
      for (size_t i = 1; i < eps_list.size(); ++i)
        if (eps_list[i] >= eps_list[i - 1])
          throw ConfigError("sweep.eps_list must be strictly decreasing");
    for (double e : eps_list)
      if (e <= 0) throw ConfigError("sweep.eps_list entries must be positive");
    if (output_dir.empty()) throw ConfigError("output.dir must not be empty");
    try {
      kinetic_spec().validate(domain());
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }

  // All effective keys in schema order (manifest echo).
  std::vector<std::pair<std::string, std::string>> echo() const;

  void set(const std::string& key, const std::string& value);
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
}

inline long to_long(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long x = std::stol(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (...) {
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  return out;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

inline void ScenarioConfig::set(const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "domain.dim") dim = static_cast<int>(to_long(key, value));
  else if (key == "domain.lx") lx = to_double(key, value);
  else if (key == "domain.ly") ly = to_double(key, value);
  else if (key == "domain.lz") lz = to_double(key, value);
  else if (key == "grid.nx") nx = static_cast<int>(to_long(key, value));
  else if (key == "grid.ny") ny = static_cast<int>(to_long(key, value));
  else if (key == "grid.nz") nz = static_cast<int>(to_long(key, value));
  else if (key == "time.t_final") t_final = to_double(key, value);
  else if (key == "time.dt") dt = to_double(key, value);
  else if (key == "time.cfl") cfl = to_double(key, value);
  else if (key == "fluid.amplitude") fluid_amplitude = to_double(key, value);
  else if (key == "fluid.advection") advection = value;
  else if (key == "fluid.implicit_diffusion") implicit_diffusion = to_bool(key, value);
  else if (key == "fluid.projection_tol") projection_tol = to_double(key, value);
  else if (key == "kinetic.eps") eps = to_double(key, value);
  else if (key == "kinetic.count") particle_count = to_long(key, value);
  else if (key == "kinetic.mass") blob_mass = to_double(key, value);
  else if (key == "kinetic.temperature") temperature = to_double(key, value);
  else if (key == "kinetic.center_x") center_x = to_double(key, value);
  else if (key == "kinetic.center_y") center_y = to_double(key, value);
  else if (key == "kinetic.center_z") center_z = to_double(key, value);
  else if (key == "kinetic.width_x") width_x = to_double(key, value);
  else if (key == "kinetic.width_y") width_y = to_double(key, value);
  else if (key == "kinetic.width_z") width_z = to_double(key, value);
  else if (key == "kinetic.mean_from_fluid") mean_from_fluid = to_bool(key, value);
  else if (key == "sweep.eps_list") eps_list = to_list(key, value);
  else if (key == "sweep.theta_coeff") theta_coeff = to_double(key, value);
  else if (key == "checkpoints.count") checkpoint_count = static_cast<int>(to_long(key, value));
  else if (key == "seed") seed = static_cast<uint64_t>(to_long(key, value));
  else if (key == "output.dir") output_dir = value;
  else throw ConfigError("unknown config key: " + key);
}

inline std::vector<std::pair<std::string, std::string>> ScenarioConfig::echo() const {
  using detail::fmt;
  std::string eps_csv;
  for (size_t i = 0; i < eps_list.size(); ++i)
    eps_csv += (i ? "," : "") + fmt(eps_list[i]);
  return {
      {"domain.dim", std::to_string(dim)},
      {"domain.lx", fmt(lx)},
      {"domain.ly", fmt(ly)},
      {"domain.lz", fmt(lz)},
      {"grid.nx", std::to_string(nx)},
      {"grid.ny", std::to_string(ny)},
      {"grid.nz", std::to_string(nz)},
      {"time.t_final", fmt(t_final)},
      {"time.dt", fmt(dt)},
      {"time.cfl", fmt(cfl)},
      {"fluid.amplitude", fmt(fluid_amplitude)},
      {"fluid.advection", advection},
      {"fluid.implicit_diffusion", implicit_diffusion ? "1" : "0"},
      {"fluid.projection_tol", fmt(projection_tol)},
      {"kinetic.eps", fmt(eps)},
      {"kinetic.count", std::to_string(particle_count)},
      {"kinetic.mass", fmt(blob_mass)},
      {"kinetic.temperature", fmt(temperature)},
      {"kinetic.center_x", fmt(center_x)},
      {"kinetic.center_y", fmt(center_y)},
      {"kinetic.center_z", fmt(center_z)},
      {"kinetic.width_x", fmt(width_x)},
      {"kinetic.width_y", fmt(width_y)},
      {"kinetic.width_z", fmt(width_z)},
      {"kinetic.mean_from_fluid", mean_from_fluid ? "1" : "0"},
      {"sweep.eps_list", eps_csv},
      {"sweep.theta_coeff", fmt(theta_coeff)},
      {"checkpoints.count", std::to_string(checkpoint_count)},
      {"seed", std::to_string(seed)},
      {"output.dir", output_dir},
  };
}

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  ScenarioConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key=value");
    cfg.set(detail::trim(line.substr(0, eq)), detail::trim(line.substr(eq + 1)));
  }
  return cfg;
}

}  // namespace vnsim
