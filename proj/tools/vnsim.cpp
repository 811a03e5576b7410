#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "vnsim/characteristics.hpp"
#include "vnsim/config.hpp"
#include "vnsim/diagnostics.hpp"
#include "vnsim/reference.hpp"
#include "vnsim/run.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumerical = 2;
constexpr int kExitValidation = 3;

vnsim::ScenarioConfig build_config(const std::string& config_path,
                                   const std::vector<std::string>& overrides) {
  vnsim::ScenarioConfig cfg;
  if (!config_path.empty()) cfg = vnsim::load_config(config_path);
  for (const auto& kv : overrides) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw vnsim::ConfigError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

// Loads the checkpointed velocity fields of a finished run as a
// piecewise-constant-in-time series.
vnsim::FieldSeries load_run_series(const std::string& dir) {
  std::ifstream is(dir + "/manifest.json");
  if (!is) throw vnsim::ConfigError("cannot open " + dir + "/manifest.json");
  nlohmann::json j;
  is >> j;
  vnsim::FieldSeries series;
  const auto& cks = j.at("checkpoints");
  for (size_t i = 0; i < cks.size(); ++i) {
    char name[64];
    std::snprintf(name, sizeof name, "%s/fields/u_%03d.bin", dir.c_str(), static_cast<int>(i));
    series.times.push_back(cks[i].get<double>());
    series.fields.push_back(vnsim::read_vector_field(name));
  }
  return series;
}

int do_check_egc(double L, double R, double T, double eps, int samples, int dim,
                 const std::string& source, const std::string& json_out) {
  vnsim::EgcQuery q;
  q.L = L;
  q.R = R;
  q.T = T;
  q.eps = eps;
  q.samples = samples;
  q.dim = dim;

  vnsim::FieldSeries series;
  if (source != "trivial") {
    series = load_run_series(source);
    if (!series.fields.empty()) q.dim = series.fields.front().grid.dim();
  }
  const vnsim::EgcResult res = vnsim::egc_check(series, q);

  std::printf("exit condition %s: %ld samples, worst exit time %.12g (horizon %.12g)\n",
              res.satisfied ? "satisfied" : "NOT satisfied", res.samples, res.worst_exit_time,
              q.T);
  std::printf("worst sample: z0=%.12g v=(%.12g", res.worst_sample.x[q.dim - 1],
              res.worst_sample.v[0]);
  for (int a = 1; a < q.dim; ++a) std::printf(", %.12g", res.worst_sample.v[a]);
  std::printf(")\n");

  nlohmann::json j;
  j["satisfied"] = res.satisfied;
  j["worst_exit_time"] = res.worst_exit_time;
  j["samples"] = res.samples;
  j["query"] = {{"L", q.L}, {"R", q.R}, {"T", q.T}, {"eps", q.eps},
                {"samples_per_axis", q.samples}, {"dim", q.dim}, {"source", source}};
  j["worst_sample"] = {{"x", std::vector<double>(res.worst_sample.x.begin(),
                                                 res.worst_sample.x.begin() + q.dim)},
                       {"v", std::vector<double>(res.worst_sample.v.begin(),
                                                 res.worst_sample.v.begin() + q.dim)}};
  if (!json_out.empty()) {
    std::ofstream os(json_out);
    if (!os) throw std::runtime_error("cannot open " + json_out);
    os << j.dump(2) << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return res.satisfied ? kExitOk : kExitValidation;
}

int do_validate() {
  struct Row {
    const char* name;
    double value;
    double bound;
    bool pass;
  };
  std::vector<Row> rows;
  auto check = [&rows](const char* name, double value, double bound) {
    rows.push_back({name, value, bound, value <= bound});
  };

  const double order = vnsim::channel_flow_order();
  rows.push_back({"channel flow order (target 2 +/- 0.2)", order, 0.2, std::abs(order - 2.0) <= 0.2});
  check("transport exact-translation error", vnsim::translation_error(3), 1e-12);
  check("exponential push vs reference integrator", vnsim::push_oracle_error(), 1e-10);
  check("velocity jacobian identity",
        std::abs(vnsim::velocity_jacobian(0.3, 0.3, 2) - std::exp(2.0)) / std::exp(2.0), 1e-12);
  {
    const double d = vnsim::delta_star();
    check("delta-star root residual", std::abs(d * std::exp(d) - 1.0 / 9.0), 1e-12);
  }
  check("exit-condition transfer bound at 1/2",
        std::abs(vnsim::egc_transfer_eps_bound(0.5) - 0.25), 1e-15);
  check("H^-1 eigenmode identity (relative)", vnsim::hminus1_eigenmode_error(), 1e-10);
  check("periodic viscous mode decay error", vnsim::stokes_mode_decay_error(), 1e-6);

  bool all = true;
  for (const auto& r : rows) {
    std::printf("%-48s %12.5g  %s\n", r.name, r.value, r.pass ? "PASS" : "FAIL");
    all = all && r.pass;
  }
  std::printf("%s\n", all ? "all validation checks passed" : "validation FAILED");
  return all ? kExitOk : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"strip-domain simulator of a drag-coupled kinetic-fluid system and its "
               "high-friction limit"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  auto add_run_opts = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "scenario config file (key=value)");
    sub->add_option("--set", overrides, "override a config key, e.g. --set grid.nx=32")
        ->take_all();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
  };

  auto* cmd_vns = app.add_subcommand("run-vns", "run the coupled kinetic-fluid system");
  add_run_opts(cmd_vns);
  auto* cmd_limit = app.add_subcommand("run-limit", "run the hydrodynamic-limit system");
  add_run_opts(cmd_limit);
  auto* cmd_sweep = app.add_subcommand("sweep-eps", "friction-parameter sweep vs the limit run");
  add_run_opts(cmd_sweep);

  auto* cmd_egc = app.add_subcommand("check-egc", "check the exit geometric condition");
  double L = 1.0, R = 1.0, T = 2.01, eps = 0.5;
  int samples = 9, dim = 2;
  std::string source = "trivial", json_out;
  cmd_egc->add_option("--height", L, "slab height L")->check(CLI::PositiveNumber);
  cmd_egc->add_option("--radius", R, "velocity ball radius R")->check(CLI::PositiveNumber);
  cmd_egc->add_option("--horizon", T, "time horizon T")->check(CLI::PositiveNumber);
  cmd_egc->add_option("--eps", eps, "friction parameter")->check(CLI::PositiveNumber);
  cmd_egc->add_option("--samples", samples, "samples per axis")->check(CLI::Range(2, 64));
  cmd_egc->add_option("--dim", dim, "dimension (trivial source only)")->check(CLI::Range(2, 3));
  cmd_egc->add_option("--source", source, "'trivial' or a finished run directory");
  cmd_egc->add_option("--json", json_out, "write the result JSON here instead of stdout");

  auto* cmd_validate = app.add_subcommand("validate", "run the reference-solution suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_validate->parsed()) return do_validate();
    if (cmd_egc->parsed()) return do_check_egc(L, R, T, eps, samples, dim, source, json_out);

    vnsim::ScenarioConfig cfg = build_config(config_path, overrides);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    cfg.validate();
    if (cmd_vns->parsed()) {
      const vnsim::RunArtifacts art = vnsim::run_vns(cfg);
      std::printf("run complete: %s (alive mass %.6g, absorbed %.6g, max ledger drift %.3g)\n",
                  art.dir.c_str(), art.final_alive, art.final_absorbed,
                  art.max_ledger_defect_rel);
    } else if (cmd_limit->parsed()) {
      const vnsim::RunArtifacts art = vnsim::run_limit(cfg);
      std::printf("run complete: %s (density mass %.6g, absorbed %.6g, max ledger drift %.3g)\n",
                  art.dir.c_str(), art.final_alive, art.final_absorbed,
                  art.max_ledger_defect_rel);
    } else if (cmd_sweep->parsed()) {
      const vnsim::ConvergenceReport rep = vnsim::sweep_eps(cfg);
      for (const auto& r : rep.rows)
        std::printf("eps %-8g u err %.6g  rho err %.6g  gap %.6g\n", r.eps, r.u_err_L2,
                    r.rho_err_Hm1, r.brinkman_gravity_gap);
      std::printf("fitted slope: %.4f\n", rep.slope);
    }
  } catch (const vnsim::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const vnsim::NumericalError& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitOk;
}
