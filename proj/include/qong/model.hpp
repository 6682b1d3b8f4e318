#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>

#include "constants.hpp"
#include "params.hpp"

namespace qong {

inline double angular_frequency(double lambda) {
  if (lambda <= 0) throw std::domain_error("wavelength must be positive");
  return 2.0 * pi * c_light / lambda;
}

// intrinsic or coupling rate from a Q factor
inline double rate_from_quality(double omega, double Q) {
  if (Q <= 0) throw std::domain_error("Q must be positive");
  return omega / Q;
}

// (kappa, gamma) of one resonance from its coupling and intrinsic Q
inline std::pair<double, double> rates_from_quality(double omega, double Qc,
                                                    double Qi) {
  return {rate_from_quality(omega, Qc), rate_from_quality(omega, Qi)};
}

// Sagnac shift seen by the mode at wavelength lambda: the cw and ccw
// resonances split by 2*delta, with delta = 2*pi*R*Omega/(lambda*n0).
inline double sagnac_shift(double radius, double n0, double lambda, double Omega) {
  return 2.0 * pi * radius * Omega / (lambda * n0);
}

// rotation in rad/s that produces a given shift
inline double omega_from_sagnac(double radius, double n0, double lambda, double delta) {
  return delta * lambda * n0 / (2.0 * pi * radius);
}

// input photon flux of a drive of power P at carrier omega
inline double photon_flux(double P, double omega) {
  if (P < 0) throw std::domain_error("power must be >= 0");
  return P / (hbar * omega);
}

// Three-wave coupling rate of a quasi-phase-matched ring. The mode overlap
// zeta carries the transverse confinement; the 4/pi is the first Fourier
// order of the poling grating.
inline double nonlinear_coupling(double chi2, double zeta, double radius,
                                 double omega1, double eps1, double eps2) {
  if (chi2 < 0 || zeta < 0 || radius <= 0 || omega1 <= 0 || eps1 <= 0 ||
      eps2 <= 0)
    throw std::domain_error("nonlinear_coupling: bad argument");
  double omega2 = 2.0 * omega1;
  double geo = std::sqrt(hbar * omega1 * omega1 * omega2 / (eps0 * 2.0 * pi * radius));
  double chi = geo * zeta / (eps1 * std::sqrt(eps2)) * 3.0 * chi2 / (4.0 * std::sqrt(2.0));
  return chi * (4.0 / pi);
}

} // namespace qong
