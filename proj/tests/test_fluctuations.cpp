#include <catch2/catch_amalgamated.hpp>

#include <qong/constants.hpp>
#include <qong/fluctuations.hpp>
#include <qong/steady_state.hpp>

#include "support.hpp"

#include <cmath>

using namespace qong;

namespace {

// symplectic product of two quadrature rows: sum over X/Y pairs of
// (x_X y_Y - x_Y y_X); input commutators give [X,Y] = i/2 per channel
double symplectic_product(const Eigen::Matrix<double, 1, 16>& x,
                          const Eigen::Matrix<double, 1, 16>& y) {
  double s = 0.0;
  for (int k = 0; k < 8; ++k)
    s += x[2 * k] * y[2 * k + 1] - x[2 * k + 1] * y[2 * k];
  return s;
}

State stable_point(const Params& p) {
  FollowResult fr = follow_branch(p, p.delta1());
  REQUIRE(fr.status == BranchStatus::ok);
  return fr.a;
}

}  // namespace

TEST_CASE("drift matrix is the negated residual Jacobian") {
  // the drift is assembled from the linearized three-wave equations, the
  // Jacobian from differentiating the residual; dynamics da/dt = -f ties them
  Rng rng(5, 0x4472696674ULL);
  for (int trial = 0; trial < 10; ++trial) {
    Params p = trial % 2 ? qt::scheme_a() : qt::scheme_c();
    p.Omega = trial * 30.0 * deg_per_hour;
    State a = qt::random_state(rng, 1e4);
    Mat8 M = drift_matrix(p, a, p.delta1());
    Mat8 J = jacobian(p, a, p.delta1());
    double scale = J.cwiseAbs().maxCoeff();
    CHECK((M + J).cwiseAbs().maxCoeff() <= 1e-10 * scale);
  }
}

TEST_CASE("linearization refuses non-stable points") {
  Params p = qt::scheme_a();
  auto sols = solve_steady(p, 0.0);
  bool exercised = false;
  for (const auto& s : sols) {
    if (s.stability == Stability::unstable) {
      CHECK_THROWS_AS(linearized_system(p, s, 0.0), UnstablePoint);
      exercised = true;
      break;
    }
  }
  REQUIRE(exercised);
}

TEST_CASE("colors decouple in the linear transfer matrix") {
  Params p = qt::scheme_c();
  p.chi = 0.0;
  State a = stable_point(p);
  TransferMatrix T = transfer_matrix(p, a, p.delta1());
  double scale = T.cwiseAbs().maxCoeff();
  // fundamental outputs (rows 0-3) see no second-harmonic inputs
  CHECK(T.block<4, 4>(0, 4).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  CHECK(T.block<4, 4>(0, 12).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  // and vice versa
  CHECK(T.block<4, 4>(4, 0).cwiseAbs().maxCoeff() <= 1e-12 * scale);
  CHECK(T.block<4, 4>(4, 8).cwiseAbs().maxCoeff() <= 1e-12 * scale);
}

TEST_CASE("linear transfer is passive: T T' = identity") {
  // without the parametric interaction the DC map is a rotation of the
  // 16 input quadratures into 8 outputs; backscatter does not break this
  Params p = qt::scheme_b();
  p.chi = 0.0;
  p.Omega = 80.0 * deg_per_hour;
  State a = stable_point(p);
  TransferMatrix T = transfer_matrix(p, a, p.delta1());
  Mat8 G = T * T.transpose();
  CHECK((G - Mat8::Identity()).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("matched coupling swaps the output onto the loss channels") {
  Params p;
  p.P1 = 1e-6;
  p.Qc1 = p.Qi1;
  p.Qc2 = p.Qi2;
  p.chi = 0.0;
  p.beta1 = p.beta2 = 0.0;
  State a = linear_solution(p, 0.0, drives(p));
  TransferMatrix T = transfer_matrix(p, a, 0.0);
  TransferMatrix expect = TransferMatrix::Zero();
  expect.block<8, 8>(0, 8) = -Mat8::Identity();
  CHECK((T - expect).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("commutators survive the parametric interaction") {
  // the DC transfer of the full nonlinear point must still map bosonic
  // inputs to bosonic outputs: unit symplectic product per output mode,
  // uncertainty product at or above the vacuum bound
  for (const Params& p : {qt::scheme_a(), qt::scheme_b(), qt::scheme_c()}) {
    State a = stable_point(p);
    TransferMatrix T = transfer_matrix(p, a, p.delta1());
    for (int m = 0; m < 4; ++m) {
      double sp = symplectic_product(T.row(2 * m), T.row(2 * m + 1));
      CHECK(sp == Catch::Approx(1.0).epsilon(1e-8));
      double vx = 0.25 * T.row(2 * m).squaredNorm();
      double vy = 0.25 * T.row(2 * m + 1).squaredNorm();
      CHECK(vx * vy >= 1.0 / 16.0 - 1e-9);
    }
  }
}

TEST_CASE("current weights are antisymmetric under beam exchange at rest") {
  // at zero rotation both circulation directions carry the same classical
  // output, so swapping them flips the sign of each differential current
  Params p = qt::scheme_c();
  State a = stable_point(p);
  State bo = output_amplitudes(p, a, drives(p));
  CHECK(std::abs(bo[0] - bo[1]) <= 1e-9 * std::abs(bo[0]));
  CurrentWeights w = current_weights(p, bo);
  for (int base : {0, 4}) {
    const Vec8& wk = base == 0 ? w.w1 : w.w2;
    // swap cw (slots base+0,1) with ccw (slots base+2,3) within the block
    double scale = wk.cwiseAbs().maxCoeff();
    CHECK(std::abs(wk[base + 0] + wk[base + 2]) <= 1e-9 * scale);
    CHECK(std::abs(wk[base + 1] + wk[base + 3]) <= 1e-9 * scale);
  }
}

TEST_CASE("current covariance is even in the rotation") {
  Params p = qt::scheme_b();
  auto cov_at = [&](double sign) {
    Params q = p;
    q.Omega = sign * 60.0 * deg_per_hour;
    FollowResult fr = follow_branch(q, q.delta1());
    REQUIRE(fr.status == BranchStatus::ok);
    TransferMatrix T = transfer_matrix(q, fr.a, q.delta1());
    State bo = output_amplitudes(q, fr.a, drives(q));
    return current_covariance(current_coefficients(T, current_weights(q, bo)));
  };
  Eigen::Matrix2d Sp = cov_at(1.0);
  Eigen::Matrix2d Sm = cov_at(-1.0);
  CHECK((Sp - Sm).cwiseAbs().maxCoeff() <= 1e-6 * Sp.cwiseAbs().maxCoeff());
}

TEST_CASE("current covariance is positive definite at the working points") {
  for (const Params& p : {qt::scheme_a(), qt::scheme_b(), qt::scheme_c()}) {
    State a = stable_point(p);
    TransferMatrix T = transfer_matrix(p, a, p.delta1());
    State bo = output_amplitudes(p, a, drives(p));
    Eigen::Matrix2d S =
        current_covariance(current_coefficients(T, current_weights(p, bo)));
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
    CHECK(es.eigenvalues()[0] > 0.0);
    CHECK(S(0, 1) == S(1, 0));
  }
}

TEST_CASE("Monte Carlo fluctuations reproduce the covariance") {
  // push iid quarter-variance Gaussian inputs through the linearized map
  // and compare the sampled current covariance against the Gram form
  const int N = 1'000'000;
  int point = 0;
  for (const Params& p : {qt::scheme_a(), qt::scheme_b()}) {
    State a = stable_point(p);
    TransferMatrix T = transfer_matrix(p, a, p.delta1());
    State bo = output_amplitudes(p, a, drives(p));
    CurrentCoefficients c =
        current_coefficients(T, current_weights(p, bo));
    Eigen::Matrix2d S = current_covariance(c);
    Rng rng(42 + point++, 0x4d43566172ULL);
    double s11 = 0.0, s22 = 0.0, s12 = 0.0;
    for (int n = 0; n < N; ++n) {
      double d1 = 0.0, d2 = 0.0;
      for (int k = 0; k < 16; ++k) {
        double u = 0.5 * rng.normal();  // variance 1/4
        d1 += c.g1[k] * u;
        d2 += c.g2[k] * u;
      }
      s11 += d1 * d1;
      s22 += d2 * d2;
      s12 += d1 * d2;
    }
    s11 /= N;
    s22 /= N;
    s12 /= N;
    double se11 = S(0, 0) * std::sqrt(2.0 / N);
    double se22 = S(1, 1) * std::sqrt(2.0 / N);
    double se12 = std::sqrt((S(0, 0) * S(1, 1) + S(0, 1) * S(0, 1)) / N);
    CHECK(std::abs(s11 - S(0, 0)) <= 3.0 * se11);
    CHECK(std::abs(s22 - S(1, 1)) <= 3.0 * se22);
    CHECK(std::abs(s12 - S(0, 1)) <= 3.0 * se12);
  }
}

TEST_CASE("covariance is continuous as the interaction switches off") {
  Params p = qt::scheme_b();
  auto cov_at = [&](double chi) {
    Params q = p;
    q.chi = chi;
    FollowResult fr = follow_branch(q, 0.0);
    REQUIRE(fr.status == BranchStatus::ok);
    TransferMatrix T = transfer_matrix(q, fr.a, 0.0);
    State bo = output_amplitudes(q, fr.a, drives(q));
    return current_covariance(current_coefficients(T, current_weights(q, bo)));
  };
  Eigen::Matrix2d S0 = cov_at(0.0);
  Eigen::Matrix2d S1 = cov_at(1.0);  // six orders below the working coupling
  CHECK((S1 - S0).cwiseAbs().maxCoeff() <= 1e-3 * S0.cwiseAbs().maxCoeff());
}

TEST_CASE("no interaction means vacuum-level output noise") {
  Params p = qt::scheme_b();
  p.chi = 0.0;
  State a = stable_point(p);
  TransferMatrix T = transfer_matrix(p, a, p.delta1());
  State bo = output_amplitudes(p, a, drives(p));
  SqueezingReport r = squeezing_levels(T, bo);
  CHECK(r.fundamental.amp_db_rel_vacuum == Catch::Approx(0.0).margin(1e-8));
  CHECK(r.fundamental.phase_db_rel_vacuum == Catch::Approx(0.0).margin(1e-8));
  CHECK(r.second_harmonic.amp_db_rel_vacuum == Catch::Approx(0.0).margin(1e-8));
  CHECK_FALSE(r.fundamental.degenerate);
}

TEST_CASE("dark output modes are flagged as degenerate") {
  Params p = qt::scheme_b();
  p.chi = 0.0;
  State a = stable_point(p);
  TransferMatrix T = transfer_matrix(p, a, p.delta1());
  ModeSqueezing m = mode_squeezing(T, 0, cplx(0.0, 0.0));
  CHECK(m.degenerate);
  // with theta pinned to zero the variances are the raw X/Y row norms
  CHECK(m.amp_var == Catch::Approx(0.25 * T.row(0).squaredNorm()).epsilon(1e-14));
  CHECK(m.phase_var == Catch::Approx(0.25 * T.row(1).squaredNorm()).epsilon(1e-14));
}
