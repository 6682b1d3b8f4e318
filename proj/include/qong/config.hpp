#pragma once

#include <cctype>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "model.hpp"
#include "optimize.hpp"
#include "params.hpp"
#include "steady_state.hpp"

namespace qong {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// full double precision, round-trips exactly through text
inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string trim(std::string s) {
  auto sp = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && sp(s.front())) s.erase(s.begin());
  while (!s.empty() && sp(s.back())) s.pop_back();
  return s;
}

inline std::vector<std::string> words(const std::string& s) {
  std::istringstream is(s);
  return {std::istream_iterator<std::string>(is),
          std::istream_iterator<std::string>()};
}

// Unit dimension of a config value. Dimensioned quantities must carry a
// suffix in the file; bare numbers are reserved for dimensionless ones.
enum class Unit { bare, power, length, rate, rotation, angle, responsivity, chi2, zeta };

struct UnitEntry {
  const char* suffix;
  double factor;  // multiply to get SI
};

inline const std::vector<UnitEntry>& unit_table(Unit u) {
  static const std::vector<UnitEntry> bare{};
  static const std::vector<UnitEntry> power{
      {"W", 1.0}, {"mW", 1e-3}, {"uW", 1e-6}, {"nW", 1e-9}, {"pW", 1e-12}};
  static const std::vector<UnitEntry> length{
      {"m", 1.0}, {"mm", 1e-3}, {"um", 1e-6}, {"nm", 1e-9}};
  static const std::vector<UnitEntry> rate{{"rad_s", 1.0}};
  static const std::vector<UnitEntry> rotation{{"rad_s", 1.0},
                                               {"deg_per_hour", deg_per_hour}};
  static const std::vector<UnitEntry> angle{{"rad", 1.0}, {"deg", pi / 180.0}};
  static const std::vector<UnitEntry> resp{{"A_W", 1.0}};
  static const std::vector<UnitEntry> chi2u{{"m_V", 1.0}, {"pm_V", 1e-12}};
  static const std::vector<UnitEntry> zetau{{"per_m", 1.0}, {"per_um", 1e6}};
  switch (u) {
    case Unit::power: return power;
    case Unit::length: return length;
    case Unit::rate: return rate;
    case Unit::rotation: return rotation;
    case Unit::angle: return angle;
    case Unit::responsivity: return resp;
    case Unit::chi2: return chi2u;
    case Unit::zeta: return zetau;
    default: return bare;
  }
}

inline std::string allowed_suffixes(Unit u) {
  std::string s;
  for (const UnitEntry& e : unit_table(u)) {
    if (!s.empty()) s += "|";
    s += e.suffix;
  }
  return s;
}

// SI suffix written by the serializer
inline const char* canonical_suffix(Unit u) {
  const auto& tab = unit_table(u);
  return tab.empty() ? "" : tab.front().suffix;
}

inline Unit key_unit(const std::string& k) {
  if (k == "P1" || k == "P2") return Unit::power;
  if (k == "radius" || k == "lambda1") return Unit::length;
  if (k == "beta1" || k == "beta2" || k == "chi") return Unit::rate;
  if (k == "Omega") return Unit::rotation;
  if (k == "psi1" || k == "psi2" || k == "phi1" || k == "phi2") return Unit::angle;
  if (k == "responsivity") return Unit::responsivity;
  if (k == "chi2") return Unit::chi2;
  if (k == "zeta") return Unit::zeta;
  return Unit::bare;  // n0 and the quality factors
}

inline ConfigError err(int line, const std::string& msg) {
  return ConfigError("config line " + std::to_string(line) + ": " + msg);
}

inline bool is_number(const std::string& tok) {
  try {
    size_t pos = 0;
    (void)std::stod(tok, &pos);
    return pos == tok.size();
  } catch (const std::exception&) {
    return false;
  }
}

inline double parse_number(const std::string& tok, int line, const std::string& key) {
  if (!is_number(tok)) throw err(line, "bad number '" + tok + "' for " + key);
  return std::stod(tok);
}

inline long long parse_int(const std::string& tok, int line, const std::string& key) {
  try {
    size_t pos = 0;
    long long v = std::stoll(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw err(line, "bad integer '" + tok + "' for " + key);
  }
}

inline bool parse_bool(const std::string& tok, int line, const std::string& key) {
  if (tok == "true") return true;
  if (tok == "false") return false;
  throw err(line, key + " must be true or false");
}

// one number, plus a mandatory unit suffix when the dimension has one
inline double take_quantity(const std::vector<std::string>& t, size_t& idx,
                            Unit u, int line, const std::string& key) {
  if (idx >= t.size()) throw err(line, "missing value for " + key);
  double v = parse_number(t[idx++], line, key);
  const auto& tab = unit_table(u);
  if (tab.empty()) return v;
  if (idx >= t.size() || is_number(t[idx]))
    throw err(line, key + " needs a unit suffix (" + allowed_suffixes(u) + ")");
  const std::string& suf = t[idx++];
  for (const UnitEntry& e : tab)
    if (suf == e.suffix) return v * e.factor;
  throw err(line, "unknown unit '" + suf + "' for " + key + " (" +
                      allowed_suffixes(u) + ")");
}

inline double parse_quantity(const std::string& value, Unit u, int line,
                             const std::string& key) {
  auto t = words(value);
  size_t idx = 0;
  double v = take_quantity(t, idx, u, line, key);
  if (idx != t.size()) throw err(line, "unexpected trailing token in " + key);
  return v;
}

// "<param> <lo> [unit] <hi> [unit] <count> lin|log"
inline SweepAxis parse_axis(const std::string& value, int line) {
  auto t = words(value);
  if (t.empty()) throw err(line, "empty sweep axis");
  SweepAxis ax;
  size_t idx = 0;
  ax.name = t[idx++];
  Params probe;
  if (!named_param(probe, ax.name))
    throw err(line, "unknown sweep parameter: " + ax.name);
  Unit u = key_unit(ax.name);
  ax.lo = take_quantity(t, idx, u, line, ax.name);
  ax.hi = take_quantity(t, idx, u, line, ax.name);
  if (idx >= t.size()) throw err(line, "sweep axis needs a point count");
  long long n = parse_int(t[idx++], line, "axis count");
  if (n < 1) throw err(line, "axis count must be >= 1");
  ax.count = (int)n;
  if (idx >= t.size()) throw err(line, "sweep axis needs lin or log");
  if (t[idx] == "lin") ax.log_scale = false;
  else if (t[idx] == "log") ax.log_scale = true;
  else throw err(line, "axis scale must be lin or log, got '" + t[idx] + "'");
  ++idx;
  if (idx != t.size()) throw err(line, "unexpected trailing token in sweep axis");
  if (ax.log_scale && (ax.lo <= 0 || ax.hi <= 0))
    throw err(line, "log axis needs positive endpoints");
  if (ax.count > 1 && !(ax.lo < ax.hi))
    throw err(line, "axis range must be increasing");
  return ax;
}

inline bool ends_with(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() &&
         s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

}  // namespace detail

struct BoundOverride {
  std::string name;
  bool is_max = false;
  double value = 0.0;  // SI
};

struct OptimizeConfig {
  Scheme scheme = Scheme::second_harmonic;
  int budget = 0;
  bool vary_chi = false;
  double chi_lo = 1.0e6, chi_hi = 1.5e6;  // rad/s, used when vary_chi
  std::vector<BoundOverride> overrides;
};

struct StabilityConfig {
  PumpAxis axis = PumpAxis::P2;
  double lo = 0.0, hi = 0.0;  // W, bisection bracket
};

struct RunConfig {
  Params params;  // SI after parsing
  uint64_t seed = 1;
  std::vector<SweepAxis> axes;  // at most two
  std::optional<OptimizeConfig> optimize;
  std::optional<StabilityConfig> stability;
};

// parameters settable from a config file but not addressable as sweep axes
inline double* config_slot(Params& p, const std::string& key) {
  if (key == "radius") return &p.radius;
  if (key == "n0") return &p.n0;
  if (key == "lambda1") return &p.lambda1;
  if (key == "responsivity") return &p.responsivity;
  return named_param(p, key);
}

inline RunConfig parse_config(std::istream& in) {
  using namespace detail;
  RunConfig cfg;
  std::set<std::string> seen;
  std::optional<double> chi2_v, zeta_v;
  bool chi_given = false;
  bool opt_scheme = false, opt_budget = false;
  bool st_pump = false, st_lo = false, st_hi = false;
  std::optional<SweepAxis> axis1, axis2;

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string text = trim(raw);
    if (text.empty()) continue;
    auto eq = text.find('=');
    if (eq == std::string::npos) throw err(line, "expected key = value");
    std::string key = trim(text.substr(0, eq));
    std::string value = trim(text.substr(eq + 1));
    if (key.empty()) throw err(line, "missing key");
    if (value.empty()) throw err(line, "missing value for " + key);
    if (!seen.insert(key).second) throw err(line, "duplicate key: " + key);

    if (key.rfind("sweep.", 0) == 0) {
      std::string sub = key.substr(6);
      if (sub == "axis1") axis1 = parse_axis(value, line);
      else if (sub == "axis2") axis2 = parse_axis(value, line);
      else throw err(line, "unknown key: " + key);
      continue;
    }

    if (key.rfind("optimize.", 0) == 0) {
      std::string sub = key.substr(9);
      if (!cfg.optimize) cfg.optimize.emplace();
      OptimizeConfig& oc = *cfg.optimize;
      if (sub == "scheme") {
        try {
          oc.scheme = scheme_from_name(value);
        } catch (const std::invalid_argument& e) {
          throw err(line, e.what());
        }
        opt_scheme = true;
      } else if (sub == "budget") {
        long long b = parse_int(value, line, key);
        if (b < 1) throw err(line, "budget must be >= 1");
        oc.budget = (int)b;
        opt_budget = true;
      } else if (sub == "vary_chi") {
        oc.vary_chi = parse_bool(value, line, key);
      } else if (sub == "chi_min") {
        oc.chi_lo = parse_quantity(value, Unit::rate, line, key);
      } else if (sub == "chi_max") {
        oc.chi_hi = parse_quantity(value, Unit::rate, line, key);
      } else if (ends_with(sub, "_min") || ends_with(sub, "_max")) {
        bool is_max = ends_with(sub, "_max");
        std::string name = sub.substr(0, sub.size() - 4);
        Params probe;
        if (!named_param(probe, name))
          throw err(line, "unknown search parameter: " + name);
        double v = parse_quantity(value, key_unit(name), line, key);
        oc.overrides.push_back({name, is_max, v});
      } else {
        throw err(line, "unknown key: " + key);
      }
      continue;
    }

    if (key.rfind("stability.", 0) == 0) {
      std::string sub = key.substr(10);
      if (!cfg.stability) cfg.stability.emplace();
      StabilityConfig& sc = *cfg.stability;
      if (sub == "pump") {
        if (value == "P1") sc.axis = PumpAxis::P1;
        else if (value == "P2") sc.axis = PumpAxis::P2;
        else throw err(line, "stability.pump must be P1 or P2");
        st_pump = true;
      } else if (sub == "lo") {
        sc.lo = parse_quantity(value, Unit::power, line, key);
        st_lo = true;
      } else if (sub == "hi") {
        sc.hi = parse_quantity(value, Unit::power, line, key);
        st_hi = true;
      } else {
        throw err(line, "unknown key: " + key);
      }
      continue;
    }

    if (key == "seed") {
      try {
        size_t pos = 0;
        cfg.seed = std::stoull(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw err(line, "bad seed '" + value + "'");
      }
      continue;
    }
    if (key == "chi2") {
      chi2_v = parse_quantity(value, Unit::chi2, line, key);
      continue;
    }
    if (key == "zeta") {
      zeta_v = parse_quantity(value, Unit::zeta, line, key);
      continue;
    }
    double* slot = config_slot(cfg.params, key);
    if (!slot) throw err(line, "unknown key: " + key);
    if (key == "chi") chi_given = true;
    *slot = parse_quantity(value, key_unit(key), line, key);
  }

  if (axis2 && !axis1) throw ConfigError("sweep.axis2 given without sweep.axis1");
  if (axis1) cfg.axes.push_back(*axis1);
  if (axis2) cfg.axes.push_back(*axis2);

  if (chi2_v.has_value() != zeta_v.has_value())
    throw ConfigError("chi2 and zeta must be given together");
  if (chi2_v) {
    if (chi_given) throw ConfigError("give either chi or (chi2, zeta), not both");
    double eps = cfg.params.n0 * cfg.params.n0;
    cfg.params.chi = nonlinear_coupling(*chi2_v, *zeta_v, cfg.params.radius,
                                        cfg.params.omega1(), eps, eps);
  }

  if (cfg.optimize) {
    if (!opt_scheme) throw ConfigError("optimize.scheme is required");
    if (!opt_budget) throw ConfigError("optimize.budget is required");
  }
  if (cfg.stability) {
    if (!st_pump || !st_lo || !st_hi)
      throw ConfigError("stability needs pump, lo and hi");
    if (!(cfg.stability->lo > 0) || !(cfg.stability->lo < cfg.stability->hi))
      throw ConfigError("stability bracket must satisfy 0 < lo < hi");
  }

  try {
    cfg.params.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid parameters: ") + e.what());
  }
  return cfg;
}

inline RunConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

// Search space of an optimize section: the scheme's standard bounds, then the
// explicit per-parameter overrides from the file.
inline SearchSpace make_search_space(const RunConfig& cfg) {
  if (!cfg.optimize) throw ConfigError("config has no optimize section");
  const OptimizeConfig& oc = *cfg.optimize;
  SearchSpace space = scheme_search_space(oc.scheme, cfg.params, oc.vary_chi,
                                          oc.chi_lo, oc.chi_hi);
  for (const BoundOverride& b : oc.overrides) {
    bool found = false;
    for (SearchDimension& d : space.dims) {
      if (d.name != b.name) continue;
      (b.is_max ? d.hi : d.lo) = b.value;
      found = true;
    }
    if (!found)
      throw ConfigError("bound for '" + b.name + "' does not apply to the " +
                        scheme_name(oc.scheme) + " search space");
  }
  for (const SearchDimension& d : space.dims) {
    if (!(d.lo < d.hi))
      throw ConfigError("empty search interval for " + d.name);
    if (d.log_scale && d.lo <= 0)
      throw ConfigError("log-scale search interval for " + d.name +
                        " needs positive bounds");
  }
  return space;
}

// Canonical SI form; parse(serialize(cfg)) is semantically identical to cfg.
inline std::string serialize_config(const RunConfig& cfg) {
  using namespace detail;
  std::ostringstream os;
  const Params& p = cfg.params;
  auto kv = [&os](const char* k, double v, const char* unit = nullptr) {
    os << k << " = " << format_g17(v);
    if (unit) os << ' ' << unit;
    os << '\n';
  };
  kv("radius", p.radius, "m");
  kv("n0", p.n0);
  kv("lambda1", p.lambda1, "m");
  kv("Qi1", p.Qi1);
  kv("Qi2", p.Qi2);
  kv("Qc1", p.Qc1);
  kv("Qc2", p.Qc2);
  kv("beta1", p.beta1, "rad_s");
  kv("beta2", p.beta2, "rad_s");
  kv("chi", p.chi, "rad_s");
  kv("P1", p.P1, "W");
  kv("P2", p.P2, "W");
  kv("Omega", p.Omega, "rad_s");
  kv("psi1", p.psi1, "rad");
  kv("psi2", p.psi2, "rad");
  kv("phi1", p.phi1, "rad");
  kv("phi2", p.phi2, "rad");
  kv("responsivity", p.responsivity, "A_W");
  os << "seed = " << cfg.seed << '\n';

  auto axis = [&os](const char* k, const SweepAxis& ax) {
    const char* suf = canonical_suffix(key_unit(ax.name));
    os << k << " = " << ax.name;
    os << ' ' << format_g17(ax.lo);
    if (*suf) os << ' ' << suf;
    os << ' ' << format_g17(ax.hi);
    if (*suf) os << ' ' << suf;
    os << ' ' << ax.count << ' ' << (ax.log_scale ? "log" : "lin") << '\n';
  };
  if (!cfg.axes.empty()) axis("sweep.axis1", cfg.axes[0]);
  if (cfg.axes.size() > 1) axis("sweep.axis2", cfg.axes[1]);

  if (cfg.optimize) {
    const OptimizeConfig& oc = *cfg.optimize;
    os << "optimize.scheme = " << scheme_name(oc.scheme) << '\n';
    os << "optimize.budget = " << oc.budget << '\n';
    os << "optimize.vary_chi = " << (oc.vary_chi ? "true" : "false") << '\n';
    if (oc.vary_chi) {
      os << "optimize.chi_min = " << format_g17(oc.chi_lo) << " rad_s\n";
      os << "optimize.chi_max = " << format_g17(oc.chi_hi) << " rad_s\n";
    }
    for (const BoundOverride& b : oc.overrides) {
      const char* suf = canonical_suffix(key_unit(b.name));
      os << "optimize." << b.name << (b.is_max ? "_max" : "_min") << " = "
         << format_g17(b.value);
      if (*suf) os << ' ' << suf;
      os << '\n';
    }
  }
  if (cfg.stability) {
    os << "stability.pump = "
       << (cfg.stability->axis == PumpAxis::P1 ? "P1" : "P2") << '\n';
    os << "stability.lo = " << format_g17(cfg.stability->lo) << " W\n";
    os << "stability.hi = " << format_g17(cfg.stability->hi) << " W\n";
  }
  return os.str();
}

} // namespace qong
