#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "params.hpp"
#include "steady_state.hpp"

namespace qong {

// Quadrature conventions: X=(a+a*)/2, Y=(a-a*)/(2i), vacuum variance 1/4.
// Cavity basis: X/Y interleaved for a1cw, a1ccw, a2cw, a2ccw (8 rows).
// Input basis: the same X/Y layout for the 4 waveguide channels, then the
// 4 intrinsic-loss channels (16 columns).
using Vec16 = Eigen::Matrix<double, 16, 1>;
using MatIn = Eigen::Matrix<double, 8, 16>;
using TransferMatrix = Eigen::Matrix<double, 8, 16>;

struct UnstablePoint : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularResponse : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Drift matrix M of the fluctuation dynamics dx/dt = M x + B u, assembled
// directly from the linearized three-wave equations in the quadrature basis
// (independently of the residual Jacobian; the spectra must agree).
inline Mat8 drift_matrix(const Params& p, const State& a, double delta1) {
  using detail::blk_conj;
  using detail::blk_normal;
  const double d2 = 2.0 * delta1;
  const cplx I(0.0, 1.0);
  const double G1 = 0.5 * (p.kappa1() + p.gamma1());
  const double G2 = 0.5 * (p.kappa2() + p.gamma2());
  Mat8 M = Mat8::Zero();
  auto add = [&M](int r, int c, const Eigen::Matrix2d& B) {
    M.block<2, 2>(2 * r, 2 * c) += B;
  };
  add(0, 0, blk_normal(-(G1 - I * delta1)) + p.chi * blk_conj(a[2]));
  add(0, 1, blk_normal(I * p.beta1));
  add(0, 2, p.chi * blk_normal(std::conj(a[0])));
  add(1, 1, blk_normal(-(G1 + I * delta1)) + p.chi * blk_conj(a[3]));
  add(1, 0, blk_normal(I * p.beta1));
  add(1, 3, p.chi * blk_normal(std::conj(a[1])));
  add(2, 2, blk_normal(-(G2 - I * d2)));
  add(2, 3, blk_normal(I * p.beta2));
  add(2, 0, -p.chi * blk_normal(a[0]));
  add(3, 3, blk_normal(-(G2 + I * d2)));
  add(3, 2, blk_normal(I * p.beta2));
  add(3, 1, -p.chi * blk_normal(a[1]));
  return M;
}

// Drift matrix gated on the linearization precondition.
inline Mat8 linearized_system(const Params& p, const SteadyState& s,
                              double delta1) {
  if (s.stability != Stability::stable)
    throw UnstablePoint("linearization requested at a non-stable fixed point");
  return drift_matrix(p, s.a, delta1);
}

// Injection weights of the 16 input quadratures: sqrt(kappa) for waveguide
// channels, sqrt(gamma) for loss channels.
inline MatIn input_matrix(const Params& p) {
  MatIn B = MatIn::Zero();
  const double sk[2] = {std::sqrt(p.kappa1()), std::sqrt(p.kappa2())};
  const double sg[2] = {std::sqrt(p.gamma1()), std::sqrt(p.gamma2())};
  for (int q = 0; q < 8; ++q) {
    int color = q / 4;  // first four quads are fundamental, last four SH
    B(q, q) = sk[color];
    B(q, 8 + q) = sg[color];
  }
  return B;
}

// DC input->output map: cavity response dx = -M^{-1} B u, then
// dbout = dbin - sqrt(kappa) da on the waveguide block.
inline TransferMatrix transfer_matrix(const Params& p, const State& a,
                                      double delta1) {
  Mat8 M = drift_matrix(p, a, delta1);
  Eigen::FullPivLU<Mat8> lu(M);
  if (!lu.isInvertible())
    throw SingularResponse("dynamical matrix is singular at DC");
  MatIn B = input_matrix(p);
  TransferMatrix T = TransferMatrix::Zero();
  T.block<8, 8>(0, 0) = Mat8::Identity();
  Eigen::Matrix<double, 8, 16> X = lu.solve(B);
  const double sk[2] = {std::sqrt(p.kappa1()), std::sqrt(p.kappa2())};
  for (int q = 0; q < 8; ++q) T.row(q) += sk[q / 4] * X.row(q);
  return T;
}

// Weights of the output quadratures in the two differential currents
// i_k = -2 A_k Im(bout*_cw bout_ccw e^{i phi_k}), linearized about the
// classical outputs.
struct CurrentWeights {
  Vec8 w1 = Vec8::Zero();
  Vec8 w2 = Vec8::Zero();
};

inline CurrentWeights current_weights(const Params& p, const State& bo) {
  auto fill = [](Eigen::Ref<Vec8> w, int base, double A, cplx bcw, cplx bccw,
                 double phi) {
    const cplx bt = bccw * std::polar(1.0, phi);
    w[base + 0] = -2.0 * A * bt.imag();
    w[base + 1] = 2.0 * A * bt.real();
    w[base + 2] =
        2.0 * A * (bcw.imag() * std::cos(phi) - bcw.real() * std::sin(phi));
    w[base + 3] =
        -2.0 * A * (bcw.real() * std::cos(phi) + bcw.imag() * std::sin(phi));
  };
  CurrentWeights w;
  fill(w.w1, 0, p.A1(), bo[0], bo[1], p.phi1);
  fill(w.w2, 4, p.A2(), bo[2], bo[3], p.phi2);
  return w;
}

// Current-noise coefficients over the 16 input quadratures (units A).
struct CurrentCoefficients {
  Vec16 g1 = Vec16::Zero();
  Vec16 g2 = Vec16::Zero();
};

inline CurrentCoefficients current_coefficients(const TransferMatrix& T,
                                                const CurrentWeights& w) {
  CurrentCoefficients c;
  c.g1 = T.transpose() * w.w1;
  c.g2 = T.transpose() * w.w2;
  return c;
}

// Covariance of (di1, di2): Gram form with the 1/4 quadrature variance of
// uncorrelated vacuum/coherent inputs.
inline Eigen::Matrix2d current_covariance(const CurrentCoefficients& c) {
  Eigen::Matrix2d S;
  S(0, 0) = 0.25 * c.g1.dot(c.g1);
  S(0, 1) = S(1, 0) = 0.25 * c.g1.dot(c.g2);
  S(1, 1) = 0.25 * c.g2.dot(c.g2);
  return S;
}

struct ModeSqueezing {
  double amp_var = 0.0, phase_var = 0.0;
  double amp_db = 0.0, phase_db = 0.0;  // -10 log10(Var), the reported level
  double amp_db_rel_vacuum = 0.0;       // -10 log10(Var/0.25), 0 at vacuum
  double phase_db_rel_vacuum = 0.0;
  bool degenerate = false;  // zero classical output, phase direction arbitrary
};

struct SqueezingReport {
  ModeSqueezing fundamental;      // cw output port at omega1
  ModeSqueezing second_harmonic;  // cw output port at omega2
};

inline ModeSqueezing mode_squeezing(const TransferMatrix& T, int row,
                                    cplx bo_mode) {
  ModeSqueezing m;
  double theta = 0.0;
  if (std::abs(bo_mode) > 0.0)
    theta = std::arg(bo_mode);
  else
    m.degenerate = true;
  Eigen::Matrix<double, 1, 16> rA =
      std::cos(theta) * T.row(row) + std::sin(theta) * T.row(row + 1);
  Eigen::Matrix<double, 1, 16> rP =
      -std::sin(theta) * T.row(row) + std::cos(theta) * T.row(row + 1);
  m.amp_var = 0.25 * rA.squaredNorm();
  m.phase_var = 0.25 * rP.squaredNorm();
  m.amp_db = -10.0 * std::log10(m.amp_var);
  m.phase_db = -10.0 * std::log10(m.phase_var);
  m.amp_db_rel_vacuum = -10.0 * std::log10(m.amp_var / 0.25);
  m.phase_db_rel_vacuum = -10.0 * std::log10(m.phase_var / 0.25);
  return m;
}

// Amplitude/phase-quadrature variances of the two detected output modes,
// in the frame of each mode's classical output phase.
inline SqueezingReport squeezing_levels(const TransferMatrix& T,
                                        const State& bo) {
  SqueezingReport r;
  r.fundamental = mode_squeezing(T, 0, bo[0]);
  r.second_harmonic = mode_squeezing(T, 4, bo[2]);
  return r;
}

} // namespace qong
