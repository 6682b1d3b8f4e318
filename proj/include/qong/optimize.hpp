#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "gp.hpp"
#include "params.hpp"
#include "rng.hpp"
#include "sensitivity.hpp"

namespace qong {

struct AllInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SearchDimension {
  std::string name;
  double lo = 0.0, hi = 0.0;
  bool log_scale = true;  // powers and Q factors span decades
};

struct SearchSpace {
  Params base;  // fixed assignments, including the scheme's zeroed drive
  std::vector<SearchDimension> dims;

  double to_physical(int j, double t) const {
    const SearchDimension& d = dims[j];
    if (d.log_scale)
      return std::pow(10.0, std::log10(d.lo) + t * (std::log10(d.hi) - std::log10(d.lo)));
    return d.lo + t * (d.hi - d.lo);
  }

  Params at(const Eigen::VectorXd& t) const {
    Params p = base;
    for (int j = 0; j < (int)dims.size(); ++j)
      set_param(p, dims[j].name, to_physical(j, t[j]));
    return p;
  }
};

// Search space of one injection scheme over the standard bounds.
inline SearchSpace scheme_search_space(Scheme scheme, const Params& base,
                                       bool vary_chi = false,
                                       double chi_lo = 1.0e6,
                                       double chi_hi = 1.5e6) {
  SearchSpace s;
  s.base = base;
  const double p_lo = 0.1e-6, p_hi = 100e-3;
  const double q_lo = 1e5, q_hi = 1e8;
  auto add = [&s](const std::string& n, double lo, double hi) {
    s.dims.push_back({n, lo, hi, true});
  };
  switch (scheme) {
    case Scheme::second_harmonic:
      s.base.P1 = 0.0;
      add("P2", p_lo, p_hi);
      break;
    case Scheme::fundamental:
      s.base.P2 = 0.0;
      add("P1", p_lo, p_hi);
      break;
    case Scheme::dual:
      add("P1", p_lo, p_hi);
      add("P2", p_lo, p_hi);
      break;
  }
  add("Qc1", q_lo, q_hi);
  add("Qc2", q_lo, q_hi);
  if (vary_chi) add("chi", chi_lo, chi_hi);
  for (const SearchDimension& d : s.dims)
    if (!(d.lo < d.hi)) throw std::invalid_argument("empty search interval: " + d.name);
  return s;
}

// Maximin Latin hypercube in [0,1]^d: stratum centers, permuted per
// dimension; the best of 64 seeded candidate designs by minimum pairwise
// distance.
inline std::vector<Eigen::VectorXd> latin_hypercube(int n, int d, uint64_t seed) {
  std::vector<Eigen::VectorXd> best;
  double best_score = -1.0;
  for (int c = 0; c < 64; ++c) {
    Rng r(seed, 0x4c48530000000000ULL + c);
    std::vector<Eigen::VectorXd> pts(n, Eigen::VectorXd(d));
    for (int j = 0; j < d; ++j) {
      std::vector<int> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      for (int i = n - 1; i > 0; --i)
        std::swap(perm[i], perm[r.uniform_index(i + 1)]);
      for (int i = 0; i < n; ++i) pts[i][j] = (perm[i] + 0.5) / n;
    }
    double score = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      for (int k = 0; k < i; ++k)
        score = std::min(score, (pts[i] - pts[k]).norm());
    if (score > best_score) {
      best_score = score;
      best = pts;
    }
  }
  return best;
}

struct TracePoint {
  int iteration = 0;
  Eigen::VectorXd x;  // physical values, one per search dimension
  double objective = 0.0;  // log10(MDR deg/h), or penalty when infeasible
  bool feasible = false;
  double best_so_far = 0.0;
  double mdr_deg_h = 0.0;  // nan when infeasible
};

struct GpSnapshot {
  int iteration = 0;
  Eigen::VectorXd lengthscales;
  double amplitude = 0.0;
};

struct OptimizeResult {
  std::vector<TracePoint> trace;
  std::vector<GpSnapshot> gp_history;
  Eigen::VectorXd best_x;  // physical
  Params best_params;
  SensitivityReport best_report;
  double best_objective = 0.0;
  uint64_t seed = 0;
};

// EI-driven Bayesian minimization of log10(MDR). Infeasible points are kept
// and penalized above the worst feasible objective so the surrogate learns
// the unstable region instead of resampling it.
inline OptimizeResult bayes_optimize(const SearchSpace& space, int budget,
                                     uint64_t seed = 1) {
  const int d = (int)space.dims.size();
  const int n_init = 2 * d + 2;
  if (budget < n_init)
    throw std::invalid_argument("budget below the initial design size");

  OptimizeResult out;
  out.seed = seed;
  std::vector<Eigen::VectorXd> X;  // normalized coords
  std::vector<double> y;
  double worst_feasible = 0.0;
  bool any_feasible = false;
  double best_obj = std::numeric_limits<double>::infinity();
  double running_min = std::numeric_limits<double>::infinity();

  auto record = [&](int it, const Eigen::VectorXd& t) {
    Params p = space.at(t);
    SensitivityReport rep = evaluate_point(p, seed);
    TracePoint tp;
    tp.iteration = it;
    tp.x.resize(d);
    for (int j = 0; j < d; ++j) tp.x[j] = space.to_physical(j, t[j]);
    tp.feasible = rep.feasible;
    if (rep.feasible) {
      tp.mdr_deg_h = rep.omega_min_deg_h;
      tp.objective = std::log10(rep.omega_min_deg_h);
      worst_feasible = any_feasible ? std::max(worst_feasible, tp.objective)
                                    : tp.objective;
      any_feasible = true;
      if (tp.objective < best_obj) {
        best_obj = tp.objective;
        out.best_x = tp.x;
        out.best_params = p;
        out.best_report = rep;
      }
    } else {
      tp.mdr_deg_h = std::numeric_limits<double>::quiet_NaN();
      tp.objective = worst_feasible + 3.0;
    }
    running_min = std::min(running_min, tp.objective);
    tp.best_so_far = running_min;
    X.push_back(t);
    y.push_back(tp.objective);
    out.trace.push_back(tp);
  };

  int it = 0;
  for (const Eigen::VectorXd& t : latin_hypercube(n_init, d, seed)) record(it++, t);

  GaussianProcess gp;
  auto refit = [&](bool hyper) {
    Eigen::MatrixXd Xm((int)X.size(), d);
    Eigen::VectorXd ym((int)y.size());
    for (int i = 0; i < (int)X.size(); ++i) {
      Xm.row(i) = X[i].transpose();
      ym[i] = y[i];
    }
    gp.fit(Xm, ym, hyper);
    if (hyper)
      out.gp_history.push_back({it, gp.lengthscales(), gp.amplitude()});
  };

  while (it < budget) {
    bool hyper = ((it - n_init) % 5 == 0);
    refit(hyper);
    double incumbent = *std::min_element(y.begin(), y.end());
    auto ei_at = [&](const Eigen::VectorXd& t) {
      auto [m, s] = gp.predict(t);
      return expected_improvement(m, s, incumbent);
    };
    Rng r(seed, 0xACC0000000000000ULL + (uint64_t)it);
    Eigen::VectorXd cand(d), bestc(d);
    double best_ei = -1.0;
    for (int k = 0; k < 512; ++k) {
      for (int j = 0; j < d; ++j) cand[j] = r.uniform();
      double e = ei_at(cand);
      if (e > best_ei) {
        best_ei = e;
        bestc = cand;
      }
    }
    for (double step = 0.05; step > 1e-3; step *= 0.5) {
      bool moved = true;
      while (moved) {
        moved = false;
        for (int j = 0; j < d; ++j) {
          for (double sgn : {1.0, -1.0}) {
            Eigen::VectorXd t = bestc;
            t[j] = std::clamp(t[j] + sgn * step, 0.0, 1.0);
            double e = ei_at(t);
            if (e > best_ei) {
              best_ei = e;
              bestc = t;
              moved = true;
            }
          }
        }
      }
    }
    record(it++, bestc);
  }

  if (!any_feasible)
    throw AllInfeasible("no feasible point found within the budget");
  out.best_objective = best_obj;
  return out;
}

struct SweepAxis {
  std::string name;
  double lo = 0.0, hi = 0.0;
  int count = 1;
  bool log_scale = false;

  std::vector<double> values() const {
    std::vector<double> v(count);
    if (count == 1) {
      v[0] = lo;
      return v;
    }
    for (int i = 0; i < count; ++i) {
      double t = double(i) / (count - 1);
      v[i] = log_scale ? std::pow(10.0, std::log10(lo) + t * (std::log10(hi) - std::log10(lo)))
                       : lo + t * (hi - lo);
    }
    return v;
  }
};

struct SweepCell {
  std::vector<double> axis_values;
  SensitivityReport report;
};

struct SweepResult {
  std::vector<SweepAxis> axes;
  std::vector<SweepCell> cells;  // outer axis major
};

// Dense grid evaluation; each cell is independent and seeded identically, so
// the result is the same for any worker count.
inline SweepResult sweep_grid(const Params& base,
                              const std::vector<SweepAxis>& axes, int jobs = 1,
                              uint64_t seed = 1) {
  if (axes.empty() || axes.size() > 2)
    throw std::invalid_argument("sweep needs 1 or 2 axes");
  Params probe = base;
  for (const SweepAxis& ax : axes) {
    if (ax.count < 1) throw std::invalid_argument("axis count must be >= 1");
    if (ax.count > 1 && !(ax.lo < ax.hi))
      throw std::invalid_argument("axis range must be increasing: " + ax.name);
    if (!named_param(probe, ax.name))
      throw std::invalid_argument("unknown model parameter: " + ax.name);
  }
  SweepResult res;
  res.axes = axes;
  std::vector<std::vector<double>> vals;
  for (const SweepAxis& ax : axes) vals.push_back(ax.values());
  size_t total = 1;
  for (const auto& v : vals) total *= v.size();
  res.cells.resize(total);

  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      size_t idx = next.fetch_add(1);
      if (idx >= total) return;
      std::vector<double> coords;
      size_t rem = idx;
      size_t inner = axes.size() == 2 ? vals[1].size() : 1;
      if (axes.size() == 2) {
        coords = {vals[0][rem / inner], vals[1][rem % inner]};
      } else {
        coords = {vals[0][rem]};
      }
      Params p = base;
      for (size_t jx = 0; jx < axes.size(); ++jx)
        set_param(p, axes[jx].name, coords[jx]);
      SweepCell cell;
      cell.axis_values = coords;
      cell.report = evaluate_point(p, seed);
      res.cells[idx] = std::move(cell);
    }
  };
  int nthreads = std::max(1, jobs);
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return res;
}

} // namespace qong
