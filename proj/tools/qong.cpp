#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>

#include "qong/config.hpp"
#include "qong/io.hpp"
#include "qong/optimize.hpp"
#include "qong/sensitivity.hpp"
#include "qong/steady_state.hpp"

namespace fs = std::filesystem;

namespace {

// exit codes: 0 feasible, 2 infeasible, 1 error
constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_infeasible = 2;

int cmd_evaluate(const qong::RunConfig& cfg, uint64_t seed,
                 const std::string& out_dir) {
  qong::SensitivityReport r = qong::evaluate_point(cfg.params, seed);
  qong::json rec = qong::evaluate_record(cfg.params, r, seed);
  std::cout << rec.dump(2) << "\n";
  if (!out_dir.empty())
    qong::write_text_file(out_dir + "/evaluate.json", rec.dump(2) + "\n");
  return r.feasible ? exit_ok : exit_infeasible;
}

int cmd_sweep(const qong::RunConfig& cfg, uint64_t seed, int jobs,
              const std::string& out_dir) {
  if (cfg.axes.empty())
    throw qong::ConfigError("sweep needs at least sweep.axis1");
  qong::SweepResult res = qong::sweep_grid(cfg.params, cfg.axes, jobs, seed);
  std::ostringstream csv;
  qong::write_sweep_csv(csv, res);
  qong::write_text_file(out_dir + "/sweep.csv", csv.str());
  qong::write_text_file(out_dir + "/sweep_manifest.json",
                        qong::sweep_manifest(cfg, res, seed).dump(2) + "\n");
  size_t n_feasible = 0;
  for (const qong::SweepCell& c : res.cells) n_feasible += c.report.feasible;
  std::cout << "sweep: " << res.cells.size() << " points, " << n_feasible
            << " feasible -> " << out_dir << "/sweep.csv\n";
  return n_feasible > 0 ? exit_ok : exit_infeasible;
}

int cmd_optimize(const qong::RunConfig& cfg, uint64_t seed,
                 const std::string& out_dir) {
  qong::SearchSpace space = qong::make_search_space(cfg);
  qong::OptimizeResult res;
  try {
    res = qong::bayes_optimize(space, cfg.optimize->budget, seed);
  } catch (const qong::AllInfeasible& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return exit_infeasible;
  }
  std::ostringstream csv;
  qong::write_trace_csv(csv, space, res);
  qong::write_text_file(out_dir + "/trace.csv", csv.str());

  qong::json best = qong::evaluate_record(res.best_params, res.best_report, seed);
  best["best_objective_log10_deg_h"] = res.best_objective;
  qong::write_text_file(out_dir + "/best.json", best.dump(2) + "\n");

  qong::RunConfig best_cfg;
  best_cfg.params = res.best_params;
  best_cfg.seed = seed;
  qong::write_text_file(out_dir + "/best.cfg", qong::serialize_config(best_cfg));

  qong::write_text_file(
      out_dir + "/optimize_manifest.json",
      qong::optimize_manifest(cfg, space, res, seed).dump(2) + "\n");
  std::cout << best.dump(2) << "\n";
  return exit_ok;
}

int cmd_stability(const qong::RunConfig& cfg, uint64_t seed,
                  const std::string& out_dir) {
  if (!cfg.stability)
    throw qong::ConfigError("config has no stability section");
  const qong::StabilityConfig& sc = *cfg.stability;
  qong::CriticalPowerResult cp = qong::critical_power(
      cfg.params, sc.axis, sc.lo, sc.hi, cfg.params.delta1());
  qong::json j;
  j["format_version"] = qong::format_version;
  j["version"] = qong::version;
  j["seed"] = seed;
  j["timestamp"] = qong::iso_timestamp();
  j["pump"] = sc.axis == qong::PumpAxis::P1 ? "P1" : "P2";
  j["bracket_W"] = qong::json::array({sc.lo, sc.hi});
  j["Pc_W"] = cp.Pc;
  j["max_re_low"] = cp.max_re_low;
  j["max_re_high"] = cp.max_re_high;
  j["params"] = qong::params_to_json(cfg.params);
  std::cout << j.dump(2) << "\n";
  if (!out_dir.empty())
    qong::write_text_file(out_dir + "/stability.json", j.dump(2) + "\n");
  return exit_ok;
}

int cmd_linear_baseline(const qong::RunConfig& cfg, uint64_t seed,
                        const std::string& out_dir) {
  const qong::Params& p = cfg.params;
  if (p.P1 <= 0)
    throw qong::ConfigError("linear-baseline needs P1 > 0");
  double closed = qong::linear_mdr_closed_form(p.P1, p.Qc1, p.Qi1, p.radius,
                                               p.n0, p.lambda1);
  qong::Params pe = p;
  pe.chi = 0.0;  // backscatter stays on; only the nonlinearity is removed
  qong::SensitivityReport r = qong::evaluate_point(pe, seed);

  qong::json j;
  j["format_version"] = qong::format_version;
  j["version"] = qong::version;
  j["seed"] = seed;
  j["timestamp"] = qong::iso_timestamp();
  j["closed_form_mdr_deg_per_hour"] = closed;
  if (r.feasible) {
    j["engine_mdr_deg_per_hour"] = r.omega_min_deg_h;
    j["engine_over_closed_form"] = r.omega_min_deg_h / closed;
  }
  j["engine"] = qong::report_to_json(pe, r);
  std::cout << j.dump(2) << "\n";
  if (!out_dir.empty())
    qong::write_text_file(out_dir + "/linear_baseline.json", j.dump(2) + "\n");
  return r.feasible ? exit_ok : exit_infeasible;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quantum-noise rotation sensitivity of a chi2 ring gyroscope"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int jobs = 1;
  uint64_t seed_override = 0;
  bool seed_given = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "config file")->required();
    cmd->add_option("--jobs", jobs, "worker threads for grid evaluation")
        ->check(CLI::PositiveNumber);
    cmd->add_option_function<uint64_t>(
        "--seed",
        [&](uint64_t s) {
          seed_override = s;
          seed_given = true;
        },
        "override the config seed");
    cmd->add_option("--out", out_dir, "output directory");
    return cmd;
  };

  CLI::App* evaluate = add_common(
      app.add_subcommand("evaluate", "single-point sensitivity report"));
  CLI::App* sweep = add_common(
      app.add_subcommand("sweep", "grid evaluation to CSV"));
  CLI::App* optimize = add_common(
      app.add_subcommand("optimize", "Bayesian search of a scheme's space"));
  CLI::App* stability = add_common(
      app.add_subcommand("stability", "critical power by bisection"));
  CLI::App* linear = add_common(
      app.add_subcommand("linear-baseline",
                         "closed-form vs engine MDR at chi = 0"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : exit_error;
  }

  // grid commands always write files; the point commands only with --out
  if (out_dir.empty() &&
      (app.got_subcommand(sweep) || app.got_subcommand(optimize)))
    out_dir = ".";

  try {
    qong::RunConfig cfg = qong::parse_config_file(config_path);
    uint64_t seed = seed_given ? seed_override : cfg.seed;
    if (!out_dir.empty()) fs::create_directories(out_dir);
    if (app.got_subcommand(evaluate)) return cmd_evaluate(cfg, seed, out_dir);
    if (app.got_subcommand(sweep)) return cmd_sweep(cfg, seed, jobs, out_dir);
    if (app.got_subcommand(optimize)) return cmd_optimize(cfg, seed, out_dir);
    if (app.got_subcommand(stability)) return cmd_stability(cfg, seed, out_dir);
    if (app.got_subcommand(linear)) return cmd_linear_baseline(cfg, seed, out_dir);
    std::cerr << "error: no subcommand\n";
    return exit_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
}
