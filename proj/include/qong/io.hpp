#pragma once

#include <json.hpp>

#include <ctime>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "config.hpp"
#include "optimize.hpp"
#include "sensitivity.hpp"
#include "version.hpp"

namespace qong {

using json = nlohmann::ordered_json;

inline std::string iso_timestamp() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

inline json params_to_json(const Params& p) {
  json j;
  j["radius"] = p.radius;
  j["n0"] = p.n0;
  j["lambda1"] = p.lambda1;
  j["Qi1"] = p.Qi1;
  j["Qi2"] = p.Qi2;
  j["Qc1"] = p.Qc1;
  j["Qc2"] = p.Qc2;
  j["beta1"] = p.beta1;
  j["beta2"] = p.beta2;
  j["chi"] = p.chi;
  j["P1"] = p.P1;
  j["P2"] = p.P2;
  j["Omega"] = p.Omega;
  j["psi1"] = p.psi1;
  j["psi2"] = p.psi2;
  j["phi1"] = p.phi1;
  j["phi2"] = p.phi2;
  j["responsivity"] = p.responsivity;
  return j;
}

namespace detail {

inline json complex_json(const std::complex<double>& z) {
  return json::array({z.real(), z.imag()});
}

inline json squeezing_json(const ModeSqueezing& m) {
  json j;
  j["amp_db"] = m.amp_db;
  j["phase_db"] = m.phase_db;
  j["amp_db_rel_vacuum"] = m.amp_db_rel_vacuum;
  j["phase_db_rel_vacuum"] = m.phase_db_rel_vacuum;
  j["amp_var"] = m.amp_var;
  j["phase_var"] = m.phase_var;
  j["degenerate"] = m.degenerate;
  return j;
}

} // namespace detail

inline json report_to_json(const Params& p, const SensitivityReport& r) {
  json j;
  j["feasible"] = r.feasible;
  if (!r.feasible) {
    j["stage"] = r.stage;
    j["reason"] = r.reason;
  }
  j["scheme"] = scheme_name(p.scheme());
  j["params"] = params_to_json(p);
  if (!r.feasible) return j;

  j["mdr_deg_per_hour"] = r.omega_min_deg_h;
  j["omega_min_rad_s"] = r.omega_min;
  j["delta_min_rad_s"] = r.delta_min;
  j["fisher"] = r.fisher;
  j["i1_mean_A"] = r.i1;
  j["i2_mean_A"] = r.i2;
  j["gradient_A_s"] = json::array({r.gradient[0], r.gradient[1]});
  j["covariance_A2"] = json::array(
      {json::array({r.covariance(0, 0), r.covariance(0, 1)}),
       json::array({r.covariance(1, 0), r.covariance(1, 1)})});
  j["covariance_regularized"] = r.covariance_regularized;
  j["gradient_step"] = {
      {"h_used", r.gradient_detail.h_used},
      {"step_disagreement", r.gradient_detail.step_disagreement},
      {"step_converged", r.gradient_detail.step_converged},
  };
  j["squeezing"] = {
      {"fundamental", detail::squeezing_json(r.squeezing.fundamental)},
      {"second_harmonic", detail::squeezing_json(r.squeezing.second_harmonic)},
  };
  json eigs = json::array();
  for (int i = 0; i < r.steady.dynamical_eigs.size(); ++i)
    eigs.push_back(detail::complex_json(r.steady.dynamical_eigs[i]));
  json amps = json::array(), outs = json::array();
  for (int i = 0; i < 4; ++i) {
    amps.push_back(detail::complex_json(r.steady.a[i]));
    outs.push_back(detail::complex_json(r.steady.b_out[i]));
  }
  j["steady"] = {
      {"stability", stability_name(r.steady.stability)},
      {"max_re_eig", r.steady.max_re_eig},
      {"residual_norm", r.steady.residual_norm},
      {"a", amps},
      {"b_out", outs},
      {"eigenvalues", eigs},
  };
  j["energy_imbalance"] = r.energy_imbalance;
  j["reanchored"] = r.reanchored;
  j["delta1_rad_s"] = r.delta1;
  return j;
}

// self-contained single-point record: snapshot + result + provenance
inline json evaluate_record(const Params& p, const SensitivityReport& r,
                            uint64_t seed) {
  json j;
  j["format_version"] = format_version;
  j["version"] = version;
  j["seed"] = seed;
  j["timestamp"] = iso_timestamp();
  j["report"] = report_to_json(p, r);
  return j;
}

inline void write_sweep_csv(std::ostream& os, const SweepResult& res) {
  for (const SweepAxis& ax : res.axes) os << ax.name << ',';
  os << "mdr_deg_per_hour,fisher,i1_mean_A,i2_mean_A,"
        "squeezing_db_fund_phase,squeezing_db_sh_amp,feasible\n";
  for (const SweepCell& cell : res.cells) {
    for (double v : cell.axis_values) os << format_g17(v) << ',';
    const SensitivityReport& r = cell.report;
    if (r.feasible) {
      os << format_g17(r.omega_min_deg_h) << ',' << format_g17(r.fisher) << ','
         << format_g17(r.i1) << ',' << format_g17(r.i2) << ','
         << format_g17(r.squeezing.fundamental.phase_db) << ','
         << format_g17(r.squeezing.second_harmonic.amp_db) << ",1\n";
    } else {
      os << "nan,nan,nan,nan,nan,nan,0\n";
    }
  }
}

inline json sweep_manifest(const RunConfig& cfg, const SweepResult& res,
                           uint64_t seed) {
  json j;
  j["format_version"] = format_version;
  j["version"] = version;
  j["command"] = "sweep";
  j["seed"] = seed;
  j["timestamp"] = iso_timestamp();
  json axes = json::array();
  for (const SweepAxis& ax : res.axes) {
    axes.push_back({{"name", ax.name},
                    {"lo", ax.lo},
                    {"hi", ax.hi},
                    {"count", ax.count},
                    {"scale", ax.log_scale ? "log" : "lin"}});
  }
  j["axes"] = axes;
  int feasible = 0;
  for (const SweepCell& c : res.cells) feasible += c.report.feasible ? 1 : 0;
  j["cells"] = res.cells.size();
  j["feasible_cells"] = feasible;
  j["fixed"] = params_to_json(cfg.params);
  return j;
}

inline void write_trace_csv(std::ostream& os, const SearchSpace& space,
                            const OptimizeResult& res) {
  os << "iteration";
  for (const SearchDimension& d : space.dims) os << ',' << d.name;
  os << ",objective,feasible,best_so_far\n";
  for (const TracePoint& tp : res.trace) {
    os << tp.iteration;
    for (int j = 0; j < tp.x.size(); ++j) os << ',' << format_g17(tp.x[j]);
    os << ',' << format_g17(tp.objective) << ',' << (tp.feasible ? 1 : 0)
       << ',' << format_g17(tp.best_so_far) << '\n';
  }
}

inline json optimize_manifest(const RunConfig& cfg, const SearchSpace& space,
                              const OptimizeResult& res, uint64_t seed) {
  json j;
  j["format_version"] = format_version;
  j["version"] = version;
  j["command"] = "optimize";
  j["seed"] = seed;
  j["timestamp"] = iso_timestamp();
  j["scheme"] = scheme_name(cfg.optimize->scheme);
  j["budget"] = cfg.optimize->budget;
  json dims = json::array();
  for (const SearchDimension& d : space.dims) {
    dims.push_back({{"name", d.name},
                    {"lo", d.lo},
                    {"hi", d.hi},
                    {"scale", d.log_scale ? "log" : "lin"}});
  }
  j["dims"] = dims;
  json hist = json::array();
  for (const GpSnapshot& s : res.gp_history) {
    json ls = json::array();
    for (int i = 0; i < s.lengthscales.size(); ++i) ls.push_back(s.lengthscales[i]);
    hist.push_back({{"iteration", s.iteration},
                    {"lengthscales", ls},
                    {"amplitude", s.amplitude}});
  }
  j["gp_history"] = hist;
  j["fixed"] = params_to_json(space.base);
  return j;
}

} // namespace qong
