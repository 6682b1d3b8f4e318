#pragma once

// Shared fixtures for the test suite: the three reference operating points
// used throughout (pure second-harmonic drive, pure fundamental drive, and
// dual drive), plus small helpers for random states.

#include <qong/params.hpp>
#include <qong/rng.hpp>
#include <qong/steady_state.hpp>

namespace qt {

// Pure second-harmonic injection, strongly overcoupled at both colors.
inline qong::Params scheme_a() {
  qong::Params p;
  p.P2 = 23.507e-3;
  p.Qc1 = 1.018e5;
  p.Qc2 = 5.462e5;
  return p;
}

// Pure fundamental injection, weakly coupled: microwatt drive.
inline qong::Params scheme_b() {
  qong::Params p;
  p.P1 = 0.945e-6;
  p.Qc1 = 6.747e6;
  p.Qc2 = 6.675e7;
  return p;
}

// Dual injection at comparable milliwatt powers.
inline qong::Params scheme_c() {
  qong::Params p;
  p.P1 = 1.5e-3;
  p.P2 = 1.873e-3;
  p.Qc1 = 4.353e5;
  p.Qc2 = 8.769e6;
  return p;
}

// A random intracavity state with amplitudes of order `scale`.
inline qong::State random_state(qong::Rng& rng, double scale) {
  qong::State a;
  for (int i = 0; i < 4; ++i)
    a[i] = qong::cplx(scale * rng.normal(), scale * rng.normal());
  return a;
}

}  // namespace qt
