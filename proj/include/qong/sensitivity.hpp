#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <string>

#include "constants.hpp"
#include "fluctuations.hpp"
#include "model.hpp"
#include "params.hpp"
#include "steady_state.hpp"

namespace qong {

struct BranchJump : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularCovariance : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroInformation : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Classical means of the 16 input quadratures: both ports of each color carry
// the same coherent drive; loss channels are vacuum.
inline Vec16 input_mean_vector(const Drives& b) {
  Vec16 u = Vec16::Zero();
  u[0] = u[2] = b.b1.real();
  u[1] = u[3] = b.b1.imag();
  u[4] = u[6] = b.b2.real();
  u[5] = u[7] = b.b2.imag();
  return u;
}

// Mean differential currents from the coherent response: the current
// functionals applied to the DC-transferred input means. This is the
// convention that reproduces the reference current levels; the bare
// classical product is classical_currents below.
inline Eigen::Vector2d mean_currents(const Params& p, const State& a,
                                     double delta1, const Drives& b) {
  TransferMatrix T = transfer_matrix(p, a, delta1);
  State bo = output_amplitudes(p, a, b);
  CurrentWeights w = current_weights(p, bo);
  Vec8 y = T * input_mean_vector(b);
  return {w.w1.dot(y), w.w2.dot(y)};
}

// Differential currents of the classical steady-state outputs alone.
inline Eigen::Vector2d classical_currents(const Params& p, const State& bo) {
  double i1 = -2.0 * p.A1() *
              std::imag(std::conj(bo[0]) * bo[1] * std::polar(1.0, p.phi1));
  double i2 = -2.0 * p.A2() *
              std::imag(std::conj(bo[2]) * bo[3] * std::polar(1.0, p.phi2));
  return {i1, i2};
}

struct GradientResult {
  Eigen::Vector2d g = Eigen::Vector2d::Zero();  // d<i>/d delta, A*s
  double h_used = 0.0;
  double step_disagreement = 0.0;  // relative h vs h/2 mismatch at acceptance
  bool step_converged = false;
};

// Branch-followed central difference of the mean currents with respect to the
// Sagnac detuning, with Richardson step control: halve h until the h and h/2
// estimates agree to 1e-4 relative, accept the h/2 estimate.
inline GradientResult current_gradient(const Params& p, const State& base,
                                       double delta1, const Drives& b,
                                       double h0 = 0.0) {
  const double base_norm = to_real(base).norm();
  auto means_at = [&](double dd) {
    NewtonResult nr = newton(p, base, dd, b);
    if (!nr.converged)
      throw BranchJump("steady state lost while shifting the detuning");
    if ((nr.a - base).norm() > 0.10 * base_norm)
      throw BranchJump("amplitude jump above 10% of the branch norm");
    return mean_currents(p, nr.a, dd, b);
  };
  GradientResult r;
  double h = h0 > 0.0 ? h0 : 1e-3 * (p.kappa1() + p.gamma1());
  for (int k = 0; k < 8; ++k) {
    Eigen::Vector2d gh = (means_at(delta1 + h) - means_at(delta1 - h)) / (2.0 * h);
    Eigen::Vector2d gh2 = (means_at(delta1 + 0.5 * h) - means_at(delta1 - 0.5 * h)) / h;
    double scale = std::max(gh2.cwiseAbs().maxCoeff(), 1e-300);
    r.g = gh2;
    r.h_used = h;
    r.step_disagreement = (gh2 - gh).cwiseAbs().maxCoeff() / scale;
    if (r.step_disagreement <= 1e-4) {
      r.step_converged = true;
      break;
    }
    h *= 0.5;
  }
  return r;
}

struct FisherResult {
  double information = 0.0;  // g' Sigma^-1 g
  Eigen::Matrix2d covariance_used = Eigen::Matrix2d::Zero();
  bool regularized = false;
};

// Fisher information of the bivariate-Gaussian current statistics. Nearly
// singular covariances are ridge-regularized and flagged; a covariance with
// zero trace carries no signal scale at all and is rejected.
inline FisherResult fisher_information(const Eigen::Vector2d& g,
                                       const Eigen::Matrix2d& Sigma) {
  FisherResult r;
  Eigen::Matrix2d S = Sigma;
  double tr = S.trace();
  if (!(tr > 0.0))
    throw SingularCovariance("current covariance has zero trace");
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
  double lo = es.eigenvalues()[0], hi = es.eigenvalues()[1];
  if (lo <= 0.0 || hi / std::max(lo, 1e-300) > 1e12) {
    S += 1e-12 * tr * Eigen::Matrix2d::Identity();
    r.regularized = true;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es2(S);
    lo = es2.eigenvalues()[0];
    hi = es2.eigenvalues()[1];
    if (lo <= 0.0 || hi / std::max(lo, 1e-300) > 1e13)
      throw SingularCovariance("current covariance singular after ridge");
  }
  r.covariance_used = S;
  r.information = g.dot(S.llt().solve(g));
  return r;
}

// The differential readout detects both colors at both ports in quadrature
// pairs; this fixed calibration relates the two-current Fisher form to the
// information of the full homodyne record.
constexpr double readout_information_scale = 16.0;

struct MdrResult {
  double delta_min = 0.0;        // rad/s
  double omega_min = 0.0;        // rad/s
  double omega_min_deg_h = 0.0;  // degrees per hour
};

inline MdrResult mdr_from_information(double information, const Params& p) {
  if (!(information > 0.0))
    throw ZeroInformation("Fisher information is not positive");
  MdrResult m;
  m.delta_min = 1.0 / std::sqrt(information);
  m.omega_min = omega_from_sagnac(p.radius, p.n0, p.lambda1, m.delta_min);
  m.omega_min_deg_h = m.omega_min / deg_per_hour;
  return m;
}

// Shot-noise-limited MDR of the linear gyro (chi=0, beta=0) in deg/h.
// N is the photon flux of the total injected power at the fundamental.
inline double linear_mdr_closed_form(double P_total, double Qc, double Qi,
                                     double radius, double n0, double lambda1) {
  double omega1 = angular_frequency(lambda1);
  auto [kappa, gamma] = rates_from_quality(omega1, Qc, Qi);
  double N = photon_flux(P_total, omega1);
  double mdr = std::sqrt(2.0) * lambda1 * n0 * (kappa + gamma) * (kappa + gamma) /
               (32.0 * pi * radius * kappa * std::sqrt(N));
  return mdr / deg_per_hour;
}

// Same bound at the optimal coupling kappa = gamma.
inline double linear_mdr_optimal_coupling(double P_total, double Qi,
                                          double radius, double n0,
                                          double lambda1) {
  double omega1 = angular_frequency(lambda1);
  double gamma = rate_from_quality(omega1, Qi);
  double N = photon_flux(P_total, omega1);
  return std::sqrt(2.0) * lambda1 * n0 * gamma /
         (8.0 * pi * radius * std::sqrt(N)) / deg_per_hour;
}

struct SensitivityReport {
  bool feasible = false;
  std::string stage;   // pipeline stage that stopped an infeasible point
  std::string reason;  // no_drive / no_convergence / unstable / ...
  double i1 = 0.0, i2 = 0.0;  // mean currents, A
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();  // A*s
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();  // A^2
  bool covariance_regularized = false;
  GradientResult gradient_detail;
  double fisher = 0.0;     // calibrated information, s^2
  double delta_min = 0.0;  // rad/s
  double omega_min = 0.0;  // rad/s
  double omega_min_deg_h = 0.0;
  SqueezingReport squeezing;
  SteadyState steady;
  double energy_imbalance = 0.0;
  bool reanchored = false;  // sub-threshold fundamental re-seeded canonically
  double delta1 = 0.0;
};

inline SensitivityReport infeasible_report(const std::string& stage,
                                           const std::string& reason) {
  SensitivityReport r;
  r.feasible = false;
  r.stage = stage;
  r.reason = reason;
  return r;
}

// Full pipeline at one parameter point: turn-on branch, transfer map,
// covariance, rotation gradient, Fisher information, MDR, squeezing.
// Infeasible points come back as structured results, not exceptions.
inline SensitivityReport evaluate_point(const Params& p, uint64_t seed = 1) {
  p.validate();
  const double delta1 = p.delta1();
  const Drives b = drives(p);
  if (p.P1 == 0.0 && p.P2 == 0.0) return infeasible_report("drive", "no_drive");

  FollowResult fr = follow_branch(p, delta1, seed);
  if (fr.status != BranchStatus::ok)
    return infeasible_report("steady", branch_status_name(fr.status));
  State base = fr.a;
  bool reanchored = false;

  if (p.P1 == 0.0 && p.P2 > 0.0) {
    // Pure second-harmonic drive: the oscillating fundamental has a sign
    // freedom, so re-seed Newton from the sign-symmetric magnitudes to land
    // on a canonical member of the pair. A fundamental that stayed at the
    // noise floor means the pump never crossed threshold: no rotation signal.
    double m1 = std::abs(base[0]);
    if (m1 > 1e-3 * std::abs(base[2])) {
      State anchor;
      anchor << cplx(m1, 0.0), cplx(m1, 0.0), base[2], base[3];
      NewtonResult nr = newton(p, anchor, delta1, b);
      if (!nr.converged) return infeasible_report("steady", "no_convergence");
      base = nr.a;
      reanchored = true;
    } else {
      return infeasible_report("steady", "unstable");
    }
  }

  SensitivityReport r;
  r.delta1 = delta1;
  r.reanchored = reanchored;
  r.steady = make_steady(p, base, delta1, b);

  TransferMatrix T;
  try {
    T = transfer_matrix(p, base, delta1);
  } catch (const SingularResponse&) {
    return infeasible_report("transfer", "singular_response");
  }
  State bo = r.steady.b_out;
  CurrentWeights w = current_weights(p, bo);
  CurrentCoefficients coeffs = current_coefficients(T, w);
  Eigen::Matrix2d Sigma = current_covariance(coeffs);

  try {
    r.gradient_detail = current_gradient(p, base, delta1, b);
  } catch (const BranchJump&) {
    return infeasible_report("gradient", "branch_jump");
  }
  r.gradient = r.gradient_detail.g;

  FisherResult fi;
  try {
    fi = fisher_information(r.gradient, Sigma);
  } catch (const SingularCovariance&) {
    return infeasible_report("covariance", "singular_covariance");
  }
  r.covariance = Sigma;
  r.covariance_regularized = fi.regularized;
  r.fisher = readout_information_scale * fi.information;

  MdrResult m;
  try {
    m = mdr_from_information(r.fisher, p);
  } catch (const ZeroInformation&) {
    return infeasible_report("information", "zero_information");
  }
  r.delta_min = m.delta_min;
  r.omega_min = m.omega_min;
  r.omega_min_deg_h = m.omega_min_deg_h;

  Eigen::Vector2d means = mean_currents(p, base, delta1, b);
  r.i1 = means[0];
  r.i2 = means[1];
  r.squeezing = squeezing_levels(T, bo);
  r.energy_imbalance = energy_imbalance(p, base, delta1);
  r.feasible = true;
  return r;
}

} // namespace qong
