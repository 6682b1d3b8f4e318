#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace qong {

struct GpError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Exact GP regression with an anisotropic squared-exponential kernel on
// normalized coordinates. Targets are standardized internally; the signal
// amplitude is profiled out of the likelihood, so the only free
// hyperparameters are the per-dimension length scales.
class GaussianProcess {
 public:
  static constexpr double base_jitter = 1e-8;
  static constexpr double max_jitter = 1e-2;
  static constexpr double min_lengthscale = 1e-2;
  static constexpr double max_lengthscale = 1e1;

  void fit(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
           bool refit_hyperparameters = true) {
    if (X.rows() < 1 || X.rows() != y.size())
      throw std::invalid_argument("gp: need at least one training point");
    X_ = X;
    y_mean_ = y.mean();
    double var = 0.0;
    for (int i = 0; i < y.size(); ++i)
      var += (y[i] - y_mean_) * (y[i] - y_mean_);
    y_std_ = y.size() > 1 ? std::sqrt(var / (y.size() - 1)) : 0.0;
    if (!(y_std_ > 0.0)) y_std_ = 1.0;
    ys_ = (y.array() - y_mean_) / y_std_;
    if (ell_.size() != X.cols()) ell_ = Eigen::VectorXd::Constant(X.cols(), 0.5);
    if (refit_hyperparameters && X.rows() >= 3) optimize_lengthscales();
    factorize();
  }

  std::pair<double, double> predict(const Eigen::VectorXd& x) const {
    if (X_.rows() == 0) throw GpError("gp: predict before fit");
    Eigen::VectorXd k(X_.rows());
    for (int i = 0; i < X_.rows(); ++i) k[i] = corr(X_.row(i).transpose(), x);
    double mean_s = k.dot(alpha_);
    Eigen::VectorXd v = llt_.matrixL().solve(k);
    double var_s = sigma2_ * (1.0 + jitter_ - v.squaredNorm());
    var_s = std::max(var_s, 0.0);
    return {y_mean_ + y_std_ * mean_s, y_std_ * std::sqrt(var_s)};
  }

  const Eigen::VectorXd& lengthscales() const { return ell_; }
  double amplitude() const { return y_std_ * std::sqrt(sigma2_); }
  double jitter() const { return jitter_; }
  double prior_mean() const { return y_mean_; }

 private:
  static double corr_ell(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                         const Eigen::VectorXd& ell) {
    double s = 0.0;
    for (int j = 0; j < a.size(); ++j) {
      double d = (a[j] - b[j]) / ell[j];
      s += d * d;
    }
    return std::exp(-0.5 * s);
  }

  double corr(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
    return corr_ell(a, b, ell_);
  }

  Eigen::MatrixXd corr_matrix(const Eigen::VectorXd& ell) const {
    const int n = X_.rows();
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      K(i, i) = 1.0;
      for (int j = 0; j < i; ++j) {
        K(i, j) = K(j, i) =
            corr_ell(X_.row(i).transpose(), X_.row(j).transpose(), ell);
      }
    }
    return K;
  }

  // Cholesky with escalating diagonal jitter; the escalation caps at
  // max_jitter, beyond which the kernel matrix is declared unusable.
  Eigen::LLT<Eigen::MatrixXd> chol(const Eigen::MatrixXd& K, double& jitter) const {
    for (jitter = base_jitter; jitter <= max_jitter; jitter *= 10.0) {
      Eigen::MatrixXd Kj = K;
      Kj.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(Kj);
      if (llt.info() == Eigen::Success) return llt;
    }
    throw GpError("gp: kernel matrix not positive definite at maximum jitter");
  }

  // Negative log marginal likelihood with the amplitude profiled out:
  // sigma2_hat = y'R^-1 y/n, nlml = n/2 log sigma2_hat + 1/2 log|R|.
  double nlml(const Eigen::VectorXd& ell) const {
    Eigen::MatrixXd K = corr_matrix(ell);
    double jit;
    Eigen::LLT<Eigen::MatrixXd> llt = chol(K, jit);
    Eigen::VectorXd a = llt.solve(ys_);
    double s2 = std::max(ys_.dot(a) / ys_.size(), 1e-12);
    double logdet = 0.0;
    Eigen::MatrixXd L = llt.matrixL();
    for (int i = 0; i < L.rows(); ++i) logdet += 2.0 * std::log(L(i, i));
    return 0.5 * ys_.size() * std::log(s2) + 0.5 * logdet;
  }

  // Deterministic multiplicative pattern search per dimension.
  void optimize_lengthscales() {
    double best = nlml(ell_);
    for (double factor : {2.0, 1.3, 1.1, 1.03}) {
      for (int sweep = 0; sweep < 6; ++sweep) {
        bool moved = false;
        for (int j = 0; j < ell_.size(); ++j) {
          for (double f : {factor, 1.0 / factor}) {
            Eigen::VectorXd trial = ell_;
            trial[j] = std::clamp(trial[j] * f, min_lengthscale, max_lengthscale);
            if (trial[j] == ell_[j]) continue;
            double v = nlml(trial);
            if (v < best - 1e-12) {
              best = v;
              ell_ = trial;
              moved = true;
            }
          }
        }
        if (!moved) break;
      }
    }
  }

  void factorize() {
    Eigen::MatrixXd K = corr_matrix(ell_);
    llt_ = chol(K, jitter_);
    alpha_ = llt_.solve(ys_);
    sigma2_ = X_.rows() > 1 ? std::max(ys_.dot(alpha_) / ys_.size(), 1e-12) : 1.0;
  }

  Eigen::MatrixXd X_;
  Eigen::VectorXd ys_;
  Eigen::VectorXd ell_;
  Eigen::VectorXd alpha_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  double y_mean_ = 0.0, y_std_ = 1.0;
  double sigma2_ = 1.0;
  double jitter_ = base_jitter;
};

// One-call posterior for a query point.
inline std::pair<double, double> gp_posterior(const Eigen::MatrixXd& X,
                                              const Eigen::VectorXd& y,
                                              const Eigen::VectorXd& query) {
  GaussianProcess gp;
  gp.fit(X, y);
  return gp.predict(query);
}

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::acos(-1.0));
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Expected improvement below the incumbent for minimization.
inline double expected_improvement(double mean, double stddev, double best) {
  if (stddev < 0.0) throw std::invalid_argument("negative stddev");
  if (stddev == 0.0) return std::max(best - mean, 0.0);
  double z = (best - mean) / stddev;
  return (best - mean) * normal_cdf(z) + stddev * normal_pdf(z);
}

} // namespace qong
