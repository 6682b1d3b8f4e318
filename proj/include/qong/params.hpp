#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

#include "constants.hpp"

namespace qong {

enum class Scheme { second_harmonic, fundamental, dual };

inline const char* scheme_name(Scheme s) {
  switch (s) {
    case Scheme::second_harmonic: return "second_harmonic";
    case Scheme::fundamental: return "fundamental";
    case Scheme::dual: return "dual";
  }
  return "?";
}

inline Scheme scheme_from_name(const std::string& name) {
  if (name == "second_harmonic") return Scheme::second_harmonic;
  if (name == "fundamental") return Scheme::fundamental;
  if (name == "dual") return Scheme::dual;
  throw std::invalid_argument("unknown injection scheme: " + name);
}

// Full parameter set of one evaluation point. Defaults are the reference
// device: 20 mm LN-like ring, fundamental at 1590 nm, SH at 795 nm.
struct Params {
  // resonator
  double radius   = 0.02;     // m
  double n0       = 2.2;      // refractive index
  double lambda1  = 1590e-9;  // m, fundamental; lambda2 is always lambda1/2
  double Qi1      = 1e7;
  double Qi2      = 1e6;
  double beta1    = 5.4e4;    // rad/s, backscatter cw<->ccw at fundamental
  double beta2    = 5.4e5;    // rad/s, at second harmonic
  double chi      = 1.26e6;   // rad/s, three-wave coupling rate

  // coupling
  double Qc1 = 1e6;
  double Qc2 = 1e6;

  // drive, per port (each color pumps both cw and ccw ports equally)
  double P1 = 0.0;  // W at fundamental
  double P2 = 0.0;  // W at second harmonic

  // rotation
  double Omega = 0.0;  // rad/s

  // input phases (drives are real by default) and homodyne detection phases
  double psi1 = 0.0;
  double psi2 = 0.0;
  double phi1 = 0.0;
  double phi2 = 0.0;

  // detection
  double responsivity = 0.58;  // A/W

  double omega1() const { return 2.0 * pi * c_light / lambda1; }
  double omega2() const { return 2.0 * omega1(); }
  double gamma1() const { return omega1() / Qi1; }
  double gamma2() const { return omega2() / Qi2; }
  double kappa1() const { return omega1() / Qc1; }
  double kappa2() const { return omega2() / Qc2; }

  // detector constants of the two difference currents
  double A1() const { return responsivity * hbar * omega1(); }
  double A2() const { return responsivity * hbar * omega2(); }

  // per-port input amplitudes, sqrt(photons/s)
  std::complex<double> drive1() const {
    return std::polar(std::sqrt(P1 / (hbar * omega1())), psi1);
  }
  std::complex<double> drive2() const {
    return std::polar(std::sqrt(P2 / (hbar * omega2())), psi2);
  }

  // Sagnac shift of the fundamental; the second harmonic sees twice this
  double delta1() const {
    return 2.0 * pi * radius * Omega / (lambda1 * n0);
  }

  Scheme scheme() const {
    if (P1 > 0.0 && P2 > 0.0) return Scheme::dual;
    if (P1 > 0.0) return Scheme::fundamental;
    return Scheme::second_harmonic;
  }

  void validate() const {
    if (radius <= 0) throw std::domain_error("radius must be positive");
    if (lambda1 <= 0) throw std::domain_error("lambda1 must be positive");
    if (n0 <= 0) throw std::domain_error("n0 must be positive");
    if (Qi1 < 1 || Qi2 < 1 || Qc1 < 1 || Qc2 < 1)
      throw std::domain_error("quality factors must be >= 1");
    if (beta1 < 0 || beta2 < 0) throw std::domain_error("beta must be >= 0");
    if (chi < 0) throw std::domain_error("chi must be >= 0");
    if (P1 < 0 || P2 < 0) throw std::domain_error("powers must be >= 0");
    if (responsivity <= 0) throw std::domain_error("responsivity must be positive");
  }
};

// Scalar parameters addressable by name, for sweep axes and search spaces.
inline double* named_param(Params& p, const std::string& name) {
  if (name == "P1") return &p.P1;
  if (name == "P2") return &p.P2;
  if (name == "Qc1") return &p.Qc1;
  if (name == "Qc2") return &p.Qc2;
  if (name == "Qi1") return &p.Qi1;
  if (name == "Qi2") return &p.Qi2;
  if (name == "Omega") return &p.Omega;
  if (name == "chi") return &p.chi;
  if (name == "beta1") return &p.beta1;
  if (name == "beta2") return &p.beta2;
  if (name == "psi1") return &p.psi1;
  if (name == "psi2") return &p.psi2;
  if (name == "phi1") return &p.phi1;
  if (name == "phi2") return &p.phi2;
  return nullptr;
}

inline void set_param(Params& p, const std::string& name, double value) {
  double* slot = named_param(p, name);
  if (!slot) throw std::invalid_argument("unknown model parameter: " + name);
  *slot = value;
}

} // namespace qong
