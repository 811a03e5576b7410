#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vnsim/config.hpp"
#include "vnsim/diagnostics.hpp"
#include "vnsim/fluid.hpp"
#include "vnsim/kinetic.hpp"
#include "vnsim/svg.hpp"

namespace vnsim {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// FNV-1a over a file's bytes, for the output manifest.
inline std::string fnv1a_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot hash " + path);
  uint64_t h = 1469598103934665603ull;
  char buf[65536];
  while (is.read(buf, sizeof buf) || is.gcount() > 0) {
    const std::streamsize n = is.gcount();
    for (std::streamsize i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
    if (!is) break;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

inline std::string ckname(const char* stem, int idx) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "fields/%s_%03d.bin", stem, idx);
  return buf;
}

}  // namespace detail

// Long-format metric rows (one row per checkpoint per metric) plus the
// in-memory observables a sweep needs.
struct RunArtifacts {
  std::string dir;
  SnapshotSeries series;
  std::vector<EnergyReport> energies;
  std::vector<MonitorReport> monitors;
  std::vector<double> concentration;
  std::vector<double> brinkman_l2;
  double max_ledger_defect_rel = 0.0;  // max over *steps*, relative to initial mass
  double final_absorbed = 0.0;
  double final_alive = 0.0;
};

class MetricWriter {
 public:
  void add(double t, const std::string& metric, double value) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%.17g,%s,%.17g\n", t, metric.c_str(), value);
    rows_ += buf;
  }
  void write(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "t,metric,value\n" << rows_;
  }

 private:
  std::string rows_;
};

inline void write_manifest(const std::string& dir, const std::string& command,
                           const ScenarioConfig& cfg, const std::vector<double>& times,
                           const std::vector<std::string>& files) {
  nlohmann::json j;
  j["command"] = command;
  nlohmann::json jc;
  for (const auto& [k, v] : cfg.echo()) jc[k] = v;
  j["config"] = jc;
  j["checkpoints"] = times;
  nlohmann::json jf;
  for (const auto& f : files) jf[f] = detail::fnv1a_file(dir + "/" + f);
  j["files"] = jf;
  std::ofstream os(dir + "/manifest.json");
  if (!os) throw std::runtime_error("cannot open " + dir + "/manifest.json");
  os << j.dump(2) << "\n";
}

// Full kinetic-fluid run: deposit -> fluid step forced by the Brinkman
// moment -> particle push, with checkpointed diagnostics.
inline RunArtifacts run_vns(const ScenarioConfig& cfg, bool write_outputs = true) {
  cfg.validate();
  const Grid g = cfg.grid();
  FluidSolver solver(g, cfg.fluid_options());
  FluidState fluid(g);
  fluid.u = vortex_field(g, cfg.fluid_amplitude);
  solver.project(fluid.u);

  ParticleEnsemble ens = sample_initial(cfg.kinetic_spec(), g.domain, cfg.particle_count,
                                        cfg.seed, &fluid.u);
  const double dt = cfg.step_size();
  const std::vector<double> cks = cfg.checkpoint_times();

  RunArtifacts art;
  art.dir = cfg.output_dir;
  if (write_outputs) std::filesystem::create_directories(cfg.output_dir + "/fields");

  EnergyTracker etr(cfg.eps);
  MonitorTracker mtr(fluid.u);
  MetricWriter mw;
  std::vector<std::string> files;

  auto emit = [&](const KineticMoments& m) {
    const double t = fluid.t;
    const int idx = static_cast<int>(art.series.times.size());
    art.series.times.push_back(t);
    art.series.u.push_back(fluid.u);
    art.series.rho.push_back(m.rho);
    art.series.brinkman_gap_sq.push_back(brinkman_gravity_gap_sq(m));

    double f_l2_sq = 0.0;
    for (int c = 0; c < g.dim(); ++c) f_l2_sq += m.brinkman[c].l2_norm() * m.brinkman[c].l2_norm();
    const double f_l2 = std::sqrt(f_l2_sq);
    art.brinkman_l2.push_back(f_l2);
    art.energies.push_back(etr.add(ens, fluid));
    art.monitors.push_back(mtr.add(t, fluid.u, f_l2));
    art.concentration.push_back(monokinetic_concentration(ens, fluid.u));

    const EnergyReport& er = art.energies.back();
    const MonitorReport& mr = art.monitors.back();
    mw.add(t, "u_l2_sq", fluid.u.l2_norm_sq());
    mw.add(t, "grad_u_l2_sq", grad_l2_norm_sq(fluid.u));
    mw.add(t, "brinkman_l2", f_l2);
    mw.add(t, "brinkman_gravity_gap_sq", art.series.brinkman_gap_sq.back());
    mw.add(t, "alive_mass", ens.alive_mass());
    mw.add(t, "absorbed_mass", ens.absorbed_total());
    mw.add(t, "truncation_loss", ens.truncated_total());
    mw.add(t, "ledger_defect", ens.ledger_defect());
    mw.add(t, "energy_kinetic", er.kinetic);
    mw.add(t, "energy_potential", er.potential);
    mw.add(t, "energy_total", er.total);
    mw.add(t, "dissipation", er.dissipation);
    mw.add(t, "cumulative_dissipation", er.cumulative_dissipation);
    mw.add(t, "energy_inequality_residual", er.inequality_residual);
    mw.add(t, "monitor_nabla_u", mr.nabla_u_L1Linf);
    mw.add(t, "monitor_u", mr.u_L1Linf);
    mw.add(t, "monitor_upsilon", mr.upsilon);
    mw.add(t, "concentration", art.concentration.back());

    if (write_outputs) {
      const std::string fu = detail::ckname("u", idx);
      const std::string fr = detail::ckname("rho", idx);
      write_field(cfg.output_dir + "/" + fu, fluid.u);
      write_field(cfg.output_dir + "/" + fr, m.rho);
      files.push_back(fu);
      files.push_back(fr);
    }
  };

  size_t next_ck = 0;
  {
    const KineticMoments m0 = deposit(ens, fluid.u, g);
    emit(m0);
    ++next_ck;
  }
  const double tol = 1e-12 * std::max(ens.initial_mass, 1.0);
  while (fluid.t < cfg.t_final - 0.5 * dt) {
    const KineticMoments m = deposit(ens, fluid.u, g);
    const VectorField& force = m.brinkman_face;
    // Per-step dissipation integral; checkpoints alone are too coarse for
    // the initial relaxation at rate 2/eps.
    etr.integrate(fluid.t, m.relative_dissipation + grad_l2_norm_sq(fluid.u));
    try {
      fluid = solver.ns_step(fluid, force, dt);
    } catch (const StepRejected& e) {
      throw NumericalError(std::string("fluid step rejected at t=") + std::to_string(fluid.t) +
                           ": " + e.what());
    }
    advance_particles(ens, fluid.u, cfg.eps, dt);
    const double defect = std::abs(ens.ledger_defect());
    art.max_ledger_defect_rel = std::max(art.max_ledger_defect_rel,
                                         defect / std::max(ens.initial_mass, 1e-300));
    if (defect > tol)
      throw NumericalError("particle mass ledger drifted beyond 1e-12 at t=" +
                           std::to_string(fluid.t));
    if (next_ck < cks.size() && fluid.t + 1e-12 >= cks[next_ck]) {
      while (next_ck < cks.size() && fluid.t + 1e-12 >= cks[next_ck]) ++next_ck;
      const KineticMoments mc = deposit(ens, fluid.u, g);
      emit(mc);
    }
  }
  art.final_absorbed = ens.absorbed_total();
  art.final_alive = ens.alive_mass();

  if (write_outputs) {
    write_ensemble(cfg.output_dir + "/fields/ensemble_final.bin", ens);
    files.push_back("fields/ensemble_final.bin");
    mw.write(cfg.output_dir + "/metrics.csv");
    files.push_back("metrics.csv");
    write_manifest(cfg.output_dir, "run-vns", cfg, art.series.times, files);
  }
  return art;
}

// Hydrodynamic-limit run: the density is carried by inertialess tracer
// characteristics along u - e_z (same sampled ensemble and CIC deposit as
// the kinetic runs, so an eps-sweep difference against this run measures
// the eps-effects and not the transport discretization), and the fluid is
// forced by -rho e_z.
inline RunArtifacts run_limit(const ScenarioConfig& cfg, bool write_outputs = true) {
  cfg.validate();
  const Grid g = cfg.grid();
  FluidSolver solver(g, cfg.fluid_options());
  FluidState fluid(g);
  fluid.u = vortex_field(g, cfg.fluid_amplitude);
  solver.project(fluid.u);
  ParticleEnsemble ens = sample_initial(cfg.kinetic_spec(), g.domain, cfg.particle_count,
                                        cfg.seed, &fluid.u);

  const double dt = cfg.step_size();
  const std::vector<double> cks = cfg.checkpoint_times();

  RunArtifacts art;
  art.dir = cfg.output_dir;
  if (write_outputs) std::filesystem::create_directories(cfg.output_dir + "/fields");
  MetricWriter mw;
  std::vector<std::string> files;

  auto emit = [&](const ScalarField& rho) {
    const double t = fluid.t;
    const int idx = static_cast<int>(art.series.times.size());
    art.series.times.push_back(t);
    art.series.u.push_back(fluid.u);
    art.series.rho.push_back(rho);
    mw.add(t, "u_l2_sq", fluid.u.l2_norm_sq());
    mw.add(t, "grad_u_l2_sq", grad_l2_norm_sq(fluid.u));
    mw.add(t, "rho_mass", rho.integral());
    mw.add(t, "absorbed_mass", ens.absorbed_total());
    mw.add(t, "truncation_loss", ens.truncated_total());
    mw.add(t, "ledger_defect", ens.ledger_defect());
    mw.add(t, "rho_max", rho.max_abs());
    if (write_outputs) {
      const std::string fu = detail::ckname("u", idx);
      const std::string fr = detail::ckname("rho", idx);
      write_field(cfg.output_dir + "/" + fu, fluid.u);
      write_field(cfg.output_dir + "/" + fr, rho);
      files.push_back(fu);
      files.push_back(fr);
    }
  };

  auto buoyancy = [&](const ScalarField& rho) {
    VectorField force(g);
    for (int k = 1; k < g.nz; ++k)
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          force.w(i, j, k) = -0.5 * (rho.at(i, j, k - 1) + rho.at(i, j, k));
    return force;
  };

  size_t next_ck = 0;
  emit(deposit_density(ens, g));
  ++next_ck;
  const double tol = 1e-12 * std::max(ens.initial_mass, 1.0);
  while (fluid.t < cfg.t_final - 0.5 * dt) {
    const VectorField force = buoyancy(deposit_density(ens, g));
    try {
      fluid = solver.ns_step(fluid, force, dt);
    } catch (const StepRejected& e) {
      throw NumericalError(std::string("limit step rejected at t=") + std::to_string(fluid.t) +
                           ": " + e.what());
    }
    advance_tracers(ens, fluid.u, dt);
    const double defect = std::abs(ens.ledger_defect());
    art.max_ledger_defect_rel = std::max(art.max_ledger_defect_rel,
                                         defect / std::max(ens.initial_mass, 1e-300));
    if (defect > tol)
      throw NumericalError("limit density ledger drifted beyond 1e-12 at t=" +
                           std::to_string(fluid.t));
    if (next_ck < cks.size() && fluid.t + 1e-12 >= cks[next_ck]) {
      while (next_ck < cks.size() && fluid.t + 1e-12 >= cks[next_ck]) ++next_ck;
      emit(deposit_density(ens, g));
    }
  }
  art.final_absorbed = ens.absorbed_total();
  art.final_alive = ens.alive_mass();

  if (write_outputs) {
    mw.write(cfg.output_dir + "/metrics.csv");
    files.push_back("metrics.csv");
    write_manifest(cfg.output_dir, "run-limit", cfg, art.series.times, files);
  }
  return art;
}

// eps sweep against the shared limit run: monokinetic preparation
// (temperature proportional to eps), matched grids, times, and initial data.
inline ConvergenceReport sweep_eps(const ScenarioConfig& cfg, bool write_outputs = true) {
  cfg.validate();
  if (cfg.eps_list.size() < 3) throw ConfigError("sweep needs >= 3 eps values");

  ScenarioConfig limit_cfg = cfg;
  limit_cfg.output_dir = cfg.output_dir + "/limit";
  const RunArtifacts limit_art = run_limit(limit_cfg, write_outputs);

  std::vector<std::pair<double, SnapshotSeries>> runs;
  for (double e : cfg.eps_list) {
    ScenarioConfig c = cfg;
    c.eps = e;
    c.temperature = cfg.theta_coeff * e;
    char sub[48];
    std::snprintf(sub, sizeof sub, "%s/eps_%g", cfg.output_dir.c_str(), e);
    c.output_dir = sub;
    RunArtifacts a = run_vns(c, write_outputs);
    runs.emplace_back(e, std::move(a.series));
  }

  ConvergenceReport rep = convergence_report(runs, limit_art.series);

  if (write_outputs) {
    std::filesystem::create_directories(cfg.output_dir + "/plots");
    nlohmann::json j;
    j["slope"] = rep.slope;
    nlohmann::json jr = nlohmann::json::array();
    std::vector<double> eps, total, gap;
    std::ofstream cs(cfg.output_dir + "/report.csv");
    cs << "eps,u_err_L2,rho_err_Hm1,total,brinkman_gravity_gap\n";
    char buf[256];
    for (const auto& r : rep.rows) {
      nlohmann::json row;
      row["eps"] = r.eps;
      row["u_err_L2"] = r.u_err_L2;
      row["rho_err_Hm1"] = r.rho_err_Hm1;
      row["total"] = r.total();
      row["brinkman_gravity_gap"] = r.brinkman_gravity_gap;
      jr.push_back(row);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.eps, r.u_err_L2,
                    r.rho_err_Hm1, r.total(), r.brinkman_gravity_gap);
      cs << buf;
      eps.push_back(r.eps);
      total.push_back(r.total());
      gap.push_back(r.brinkman_gravity_gap);
    }
    j["rows"] = jr;
    std::ofstream os(cfg.output_dir + "/report.json");
    os << j.dump(2) << "\n";
    write_loglog_svg(cfg.output_dir + "/plots/error_vs_eps.svg", eps, total,
                     "limit error vs friction parameter", "eps", "total error", rep.slope);
    bool gap_pos = true;
    for (double v : gap) gap_pos = gap_pos && v > 0.0;
    if (gap_pos)
      write_loglog_svg(cfg.output_dir + "/plots/brinkman_gap_vs_eps.svg", eps, gap,
                       "drag-gravity gap vs friction parameter", "eps", "gap");
  }
  return rep;
}

}  // namespace vnsim
