#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include "params.hpp"
#include "rng.hpp"

namespace qong {

// intracavity amplitudes, order a1cw, a1ccw, a2cw, a2ccw
using State = Eigen::Vector4cd;
using Vec8 = Eigen::Matrix<double, 8, 1>;
using Mat8 = Eigen::Matrix<double, 8, 8>;
using cplx = std::complex<double>;

struct Drives {
  cplx b1, b2;  // per-port input amplitudes; both ports of a color share one
};

inline Drives drives(const Params& p) { return {p.drive1(), p.drive2()}; }

inline double drive_norm(const Drives& b) {
  return std::sqrt(2.0 * (std::norm(b.b1) + std::norm(b.b2)));
}

inline Vec8 to_real(const State& a) {
  Vec8 x;
  for (int i = 0; i < 4; ++i) {
    x[2 * i] = a[i].real();
    x[2 * i + 1] = a[i].imag();
  }
  return x;
}

inline State to_complex(const Vec8& x) {
  State a;
  for (int i = 0; i < 4; ++i) a[i] = cplx(x[2 * i], x[2 * i + 1]);
  return a;
}

// Fixed-point residual f of the mean-field equations; dynamics is da/dt = -f.
inline State residual(const Params& p, const State& a, double delta1,
                      const Drives& b) {
  const double d2 = 2.0 * delta1;
  const cplx I(0.0, 1.0);
  const double G1 = 0.5 * (p.kappa1() + p.gamma1());
  const double G2 = 0.5 * (p.kappa2() + p.gamma2());
  const double sk1 = std::sqrt(p.kappa1());
  const double sk2 = std::sqrt(p.kappa2());
  State f;
  f[0] = (G1 - I * delta1) * a[0] - I * p.beta1 * a[1] -
         p.chi * std::conj(a[0]) * a[2] - sk1 * b.b1;
  f[1] = (G1 + I * delta1) * a[1] - I * p.beta1 * a[0] -
         p.chi * std::conj(a[1]) * a[3] - sk1 * b.b1;
  f[2] = (G2 - I * d2) * a[2] - I * p.beta2 * a[3] + 0.5 * p.chi * a[0] * a[0] -
         sk2 * b.b2;
  f[3] = (G2 + I * d2) * a[3] - I * p.beta2 * a[2] + 0.5 * p.chi * a[1] * a[1] -
         sk2 * b.b2;
  return f;
}

namespace detail {

// real 2x2 embeddings of complex coefficients acting on da and on conj(da)
inline Eigen::Matrix2d blk_normal(const cplx& c) {
  Eigen::Matrix2d m;
  m << c.real(), -c.imag(), c.imag(), c.real();
  return m;
}

inline Eigen::Matrix2d blk_conj(const cplx& c) {
  Eigen::Matrix2d m;
  m << c.real(), c.imag(), c.imag(), -c.real();
  return m;
}

} // namespace detail

// Jacobian of the real-expanded residual. Conjugate terms make f
// non-holomorphic, so Re/Im parts are independent variables.
inline Mat8 jacobian(const Params& p, const State& a, double delta1) {
  using detail::blk_conj;
  using detail::blk_normal;
  const double d2 = 2.0 * delta1;
  const cplx I(0.0, 1.0);
  const double G1 = 0.5 * (p.kappa1() + p.gamma1());
  const double G2 = 0.5 * (p.kappa2() + p.gamma2());
  Mat8 J = Mat8::Zero();
  auto add = [&J](int r, int c, const Eigen::Matrix2d& B) {
    J.block<2, 2>(2 * r, 2 * c) += B;
  };
  add(0, 0, blk_normal(G1 - I * delta1) + blk_conj(-p.chi * a[2]));
  add(0, 1, blk_normal(-I * p.beta1));
  add(0, 2, blk_normal(-p.chi * std::conj(a[0])));
  add(1, 1, blk_normal(G1 + I * delta1) + blk_conj(-p.chi * a[3]));
  add(1, 0, blk_normal(-I * p.beta1));
  add(1, 3, blk_normal(-p.chi * std::conj(a[1])));
  add(2, 2, blk_normal(G2 - I * d2));
  add(2, 3, blk_normal(-I * p.beta2));
  add(2, 0, blk_normal(p.chi * a[0]));
  add(3, 3, blk_normal(G2 + I * d2));
  add(3, 2, blk_normal(-I * p.beta2));
  add(3, 1, blk_normal(p.chi * a[1]));
  return J;
}

enum class Stability { stable, unstable, marginal };

inline const char* stability_name(Stability s) {
  switch (s) {
    case Stability::stable: return "stable";
    case Stability::unstable: return "unstable";
    case Stability::marginal: return "marginal";
  }
  return "?";
}

inline double stability_margin(const Params& p) {
  return 1e-6 * (p.kappa1() + p.gamma1());
}

using EigList = Eigen::Matrix<cplx, 8, 1>;

inline EigList dynamical_eigenvalues(const Mat8& dynamics) {
  Eigen::EigenSolver<Mat8> es(dynamics, false);
  if (es.info() == Eigen::Success) return es.eigenvalues();
  // The real Francis QR iteration can stall when the counter-propagating
  // blocks are nearly degenerate (rotation rates ~0); the complex single-shift
  // Schur iteration does not share that failure mode, so retry with it.
  Eigen::ComplexEigenSolver<Eigen::Matrix<cplx, 8, 8>> ces(
      dynamics.cast<cplx>(), false);
  if (ces.info() == Eigen::Success) return ces.eigenvalues();
  throw std::runtime_error("eigendecomposition of the dynamical matrix failed");
}

// largest real part of the dynamical spectrum (eigenvalues of -J)
inline double max_growth_rate(const Params& p, const State& a, double delta1) {
  return dynamical_eigenvalues(-jacobian(p, a, delta1)).real().maxCoeff();
}

inline Stability classify_stability(double max_re, double margin) {
  if (max_re < -margin) return Stability::stable;
  if (max_re > margin) return Stability::unstable;
  return Stability::marginal;
}

// verdict on the dynamics matrix of x' = g(x); margin separates "marginal"
inline Stability classify_stability(const Mat8& dynamics, double margin) {
  return classify_stability(dynamical_eigenvalues(dynamics).real().maxCoeff(),
                            margin);
}

inline Stability classify_stability(const Params& p, const State& a,
                                    double delta1) {
  return classify_stability(max_growth_rate(p, a, delta1),
                            stability_margin(p));
}

inline bool is_stable(const Params& p, const State& a, double delta1) {
  return classify_stability(p, a, delta1) == Stability::stable;
}

struct NewtonResult {
  State a;
  bool converged = false;
  int iterations = 0;
  std::vector<double> residual_history;
};

// Damped Newton on the 8-dimensional real system. Tolerance scales with the
// drive so converged points have physically negligible residual.
inline NewtonResult newton(const Params& p, const State& a0, double delta1,
                           const Drives& b, int max_iterations = 80) {
  NewtonResult res;
  res.a = a0;
  const double nb = drive_norm(b);
  const double tol = 1e-10 * std::max(1.0, nb);
  for (int it = 0; it < max_iterations; ++it) {
    State f = residual(p, res.a, delta1, b);
    double fn = to_real(f).norm();
    res.residual_history.push_back(fn);
    if (fn <= tol) {
      res.converged = true;
      res.iterations = it;
      return res;
    }
    Eigen::PartialPivLU<Mat8> lu(jacobian(p, res.a, delta1));
    Vec8 dx = lu.solve(-to_real(f));
    if (!dx.allFinite()) return res;
    State an = res.a;
    double t = 1.0;
    for (int k = 0; k < 30; ++k) {
      an = to_complex(to_real(res.a) + t * dx);
      if (to_real(residual(p, an, delta1, b)).norm() < fn) break;
      t *= 0.5;
    }
    res.a = an;
  }
  double fn = to_real(residual(p, res.a, delta1, b)).norm();
  res.residual_history.push_back(fn);
  res.converged = fn <= 1e-8 * std::max(1.0, nb);
  res.iterations = max_iterations;
  return res;
}

// output amplitudes b_out = b_in - sqrt(kappa) a, per port
inline State output_amplitudes(const Params& p, const State& a,
                               const Drives& b) {
  const double sk1 = std::sqrt(p.kappa1());
  const double sk2 = std::sqrt(p.kappa2());
  State bo;
  bo[0] = b.b1 - sk1 * a[0];
  bo[1] = b.b1 - sk1 * a[1];
  bo[2] = b.b2 - sk2 * a[2];
  bo[3] = b.b2 - sk2 * a[3];
  return bo;
}

struct SteadyState {
  State a;
  State b_out;
  double residual_norm = 0.0;
  EigList dynamical_eigs = EigList::Zero();
  double max_re_eig = 0.0;
  Stability stability = Stability::marginal;
};

inline SteadyState make_steady(const Params& p, const State& a, double delta1,
                               const Drives& b) {
  SteadyState s;
  s.a = a;
  s.b_out = output_amplitudes(p, a, b);
  s.residual_norm = to_real(residual(p, a, delta1, b)).norm();
  s.dynamical_eigs = dynamical_eigenvalues(-jacobian(p, a, delta1));
  s.max_re_eig = s.dynamical_eigs.real().maxCoeff();
  s.stability = classify_stability(s.max_re_eig, stability_margin(p));
  return s;
}

// Linear (chi=0) solution; the two colors decouple into 2x2 complex systems.
inline State linear_solution(const Params& p, double delta1, const Drives& b) {
  const cplx I(0.0, 1.0);
  State a = State::Zero();
  auto solve2 = [&I](double G, double d, double beta, cplx rhs) {
    Eigen::Matrix2cd A;
    A << G - I * d, -I * beta, -I * beta, G + I * d;
    Eigen::Vector2cd r(rhs, rhs);
    Eigen::Vector2cd x = A.lu().solve(r);
    return x;
  };
  const double G1 = 0.5 * (p.kappa1() + p.gamma1());
  const double G2 = 0.5 * (p.kappa2() + p.gamma2());
  Eigen::Vector2cd x1 =
      solve2(G1, delta1, p.beta1, std::sqrt(p.kappa1()) * b.b1);
  Eigen::Vector2cd x2 =
      solve2(G2, 2.0 * delta1, p.beta2, std::sqrt(p.kappa2()) * b.b2);
  a[0] = x1[0];
  a[1] = x1[1];
  a[2] = x2[0];
  a[3] = x2[1];
  return a;
}

// Multi-start search for distinct fixed points: zero start, linear start,
// 16 random starts at the intracavity amplitude scale.
inline std::vector<SteadyState> solve_steady(const Params& p, double delta1,
                                             uint64_t seed = 1) {
  const Drives b = drives(p);
  std::vector<State> starts;
  starts.push_back(State::Zero());
  starts.push_back(linear_solution(p, delta1, b));
  const double scale = std::abs(b.b1) / std::sqrt(p.kappa1()) +
                       std::abs(b.b2) / std::sqrt(p.kappa2());
  Rng rng(seed, 0x5374656164795374ULL);
  for (int s = 0; s < 16; ++s) {
    State a0;
    for (int i = 0; i < 4; ++i)
      a0[i] = scale * cplx(rng.normal(), rng.normal());
    starts.push_back(a0);
  }
  std::vector<SteadyState> found;
  for (const State& a0 : starts) {
    NewtonResult nr = newton(p, a0, delta1, b);
    if (!nr.converged) continue;
    bool dup = false;
    for (const SteadyState& s : found) {
      double tol = 1e-6 * (1.0 + std::max(s.a.norm(), nr.a.norm()));
      if ((s.a - nr.a).norm() <= tol) {
        dup = true;
        break;
      }
    }
    if (!dup) found.push_back(make_steady(p, nr.a, delta1, b));
  }
  std::sort(found.begin(), found.end(),
            [](const SteadyState& x, const SteadyState& y) {
              double nx = x.a.norm(), ny = y.a.norm();
              if (nx != ny) return nx < ny;
              return x.a[0].real() < y.a[0].real();
            });
  return found;
}

enum class BranchStatus { ok, no_convergence, unstable };

inline const char* branch_status_name(BranchStatus s) {
  switch (s) {
    case BranchStatus::ok: return "ok";
    case BranchStatus::no_convergence: return "no_convergence";
    case BranchStatus::unstable: return "unstable";
  }
  return "?";
}

struct FollowResult {
  State a;
  BranchStatus status = BranchStatus::no_convergence;
};

// Operating branch: ramp the drive amplitude from 1% to full over a geometric
// grid, tracking the solution by Newton continuation (the physical turn-on).
// If the tracked branch destabilizes mid-ramp, hunt for a nearby stable
// solution with randomized restarts and keep the closest one.
inline FollowResult follow_branch(const Params& p, double delta1,
                                  uint64_t seed = 1, int nsteps = 60,
                                  bool recover = true) {
  const Drives bt = drives(p);
  Rng rng(seed, 0x466f6c6c6f774272ULL);
  State a = State::Zero();
  const double lo = std::log(1e-2), hi = std::log(1.0);
  for (int step = 0; step < nsteps; ++step) {
    double t = std::exp(lo + (hi - lo) * step / double(nsteps - 1));
    Drives b{t * bt.b1, t * bt.b2};
    NewtonResult nr = newton(p, a, delta1, b);
    if (!nr.converged) return {a, BranchStatus::no_convergence};
    a = nr.a;
    if (recover && !is_stable(p, a, delta1)) {
      const double scale =
          std::sqrt(std::abs(b.b1) / std::sqrt(p.kappa1()) +
                    std::abs(b.b2) / std::sqrt(p.kappa2())) +
          a.norm();
      bool have_best = false;
      State best;
      for (int s = 0; s < 24; ++s) {
        double amp = 0.3 * std::pow(1.5, s % 4);
        State pert = a;
        for (int i = 0; i < 4; ++i)
          pert[i] += scale * amp * cplx(rng.normal(), rng.normal());
        NewtonResult cand = newton(p, pert, delta1, b);
        if (!cand.converged || !is_stable(p, cand.a, delta1)) continue;
        if (!have_best || (cand.a - a).norm() < (best - a).norm()) {
          best = cand.a;
          have_best = true;
        }
      }
      if (!have_best) return {a, BranchStatus::unstable};
      a = best;
    }
  }
  if (recover && !is_stable(p, a, delta1))
    return {a, BranchStatus::unstable};
  return {a, BranchStatus::ok};
}

struct NoBracket : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class PumpAxis { P1, P2 };

// Stability of the naturally continued branch at full power; used to bracket
// the parametric threshold. No recovery here: the question is where the
// turn-on branch itself destabilizes.
inline bool followed_branch_stable(Params p, PumpAxis axis, double power,
                                   double delta1 = 0.0) {
  if (axis == PumpAxis::P1)
    p.P1 = power;
  else
    p.P2 = power;
  FollowResult fr = follow_branch(p, delta1, 1, 60, false);
  if (fr.status == BranchStatus::no_convergence) return false;
  return is_stable(p, fr.a, delta1);
}

struct CriticalPowerResult {
  double Pc = 0.0;
  double max_re_low = 0.0;   // growth rate just below the boundary
  double max_re_high = 0.0;  // and just above
};

inline CriticalPowerResult critical_power(const Params& p, PumpAxis axis,
                                          double p_lo, double p_hi,
                                          double delta1 = 0.0) {
  bool s_lo = followed_branch_stable(p, axis, p_lo, delta1);
  bool s_hi = followed_branch_stable(p, axis, p_hi, delta1);
  if (s_lo == s_hi)
    throw NoBracket("stability verdict equal at both bracket endpoints");
  // keep lo on the stable side
  bool lo_is_stable = s_lo;
  while (p_hi - p_lo > 1e-4 * p_hi) {
    double mid = 0.5 * (p_lo + p_hi);
    if (followed_branch_stable(p, axis, mid, delta1) == lo_is_stable)
      p_lo = mid;
    else
      p_hi = mid;
  }
  CriticalPowerResult r;
  r.Pc = 0.5 * (p_lo + p_hi);
  auto rate_at = [&](double power) {
    Params q = p;
    if (axis == PumpAxis::P1)
      q.P1 = power;
    else
      q.P2 = power;
    FollowResult fr = follow_branch(q, delta1, 1, 60, false);
    return max_growth_rate(q, fr.a, delta1);
  };
  r.max_re_low = rate_at(p_lo);
  r.max_re_high = rate_at(p_hi);
  return r;
}

struct Diverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fixed-step RK4 on da/dt = -f(a). The step resolves the fastest linear rate
// including the instantaneous parametric rates chi*|a|. Returns the sampled
// trajectory, initial state first.
inline std::vector<State> integrate_classical(const Params& p, const State& a0,
                                              double delta1, double duration,
                                              double dt = 0.0) {
  const Drives b = drives(p);
  auto deriv = [&](const State& a) { return (-residual(p, a, delta1, b)).eval(); };
  std::vector<State> traj;
  State a = a0;
  traj.push_back(a);
  double t = 0.0;
  while (t < duration) {
    double rate = std::max({0.5 * (p.kappa1() + p.gamma1()),
                            0.5 * (p.kappa2() + p.gamma2()),
                            std::abs(delta1) * 2.0, p.beta1, p.beta2,
                            p.chi * (std::abs(a[2]) + std::abs(a[3]) +
                                     std::abs(a[0]) + std::abs(a[1]))});
    double h = dt > 0.0 ? dt : 0.1 / rate;
    h = std::min(h, duration - t);
    State k1 = deriv(a);
    State k2 = deriv(a + 0.5 * h * k1);
    State k3 = deriv(a + 0.5 * h * k2);
    State k4 = deriv(a + h * k3);
    a = a + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!to_real(a).allFinite() || to_real(a).cwiseAbs().maxCoeff() > 1e12)
      throw Diverged("classical trajectory exceeded amplitude bound");
    t += h;
    traj.push_back(a);
  }
  return traj;
}

struct BranchLost : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Natural-parameter continuation over a user grid of one scalar setter.
template <class Setter>
inline std::vector<SteadyState> continue_branch(
    Params p, Setter&& set_param, const std::vector<double>& grid,
    double delta1, const State& a_start) {
  std::vector<SteadyState> branch;
  State a = a_start;
  for (size_t i = 0; i < grid.size(); ++i) {
    set_param(p, grid[i]);
    const Drives b = drives(p);
    NewtonResult nr = newton(p, a, delta1, b);
    if (!nr.converged)
      throw BranchLost("continuation lost the branch at grid index " +
                       std::to_string(i));
    a = nr.a;
    branch.push_back(make_steady(p, a, delta1, b));
  }
  return branch;
}

// Relative photon-energy imbalance: in = out + intrinsic loss. Three-wave
// mixing drops out because omega2 = 2*omega1.
inline double energy_imbalance(const Params& p, const State& a,
                               double delta1) {
  const Drives b = drives(p);
  State bo = output_amplitudes(p, a, b);
  const double hw1 = hbar * p.omega1(), hw2 = hbar * p.omega2();
  double in = 2.0 * hw1 * std::norm(b.b1) + 2.0 * hw2 * std::norm(b.b2);
  double out = hw1 * (std::norm(bo[0]) + std::norm(bo[1])) +
               hw2 * (std::norm(bo[2]) + std::norm(bo[3]));
  double loss = hw1 * p.gamma1() * (std::norm(a[0]) + std::norm(a[1])) +
                hw2 * p.gamma2() * (std::norm(a[2]) + std::norm(a[3]));
  return std::abs(in - out - loss) / std::max(in, 1e-300);
}

} // namespace qong
