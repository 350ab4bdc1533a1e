#ifndef UAL_BPR_HPP
#define UAL_BPR_HPP

#include <algorithm>
#include <string>

#include <Eigen/Core>

#include "ual/error.hpp"
#include "ual/linalg.hpp"
#include "ual/model.hpp"

namespace ual {

/// phi(x, p) = [1, x, ..., x^p].
inline Eigen::VectorXd feature_map(double x, int degree) {
  if (degree < 0) throw InvalidArgument("feature_map: degree must be >= 0");
  Eigen::VectorXd phi(degree + 1);
  double v = 1.0;
  for (int i = 0; i <= degree; ++i) {
    phi(i) = v;
    v *= x;
  }
  return phi;
}

/// Rows are feature_map(x_i, degree)^T.
inline Eigen::MatrixXd design_matrix(const Eigen::Ref<const Eigen::VectorXd>& xs, int degree) {
  if (degree < 0) throw InvalidArgument("design_matrix: degree must be >= 0");
  Eigen::MatrixXd phi(xs.size(), degree + 1);
  for (Eigen::Index i = 0; i < xs.size(); ++i) phi.row(i) = feature_map(xs(i), degree).transpose();
  return phi;
}

/// Conjugate Gaussian prior theta ~ N(mean, covariance) with known noise.
struct BprPrior {
  int degree = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double noise_variance = 1.0;

  static BprPrior isotropic(int degree, double prior_variance = 1.0, double noise_variance = 1.0) {
    BprPrior p;
    p.degree = degree;
    p.mean = Eigen::VectorXd::Zero(degree + 1);
    p.covariance = prior_variance * Eigen::MatrixXd::Identity(degree + 1, degree + 1);
    p.noise_variance = noise_variance;
    return p;
  }

  void validate() const {
    if (degree < 0) throw InvalidArgument("BprPrior: degree must be >= 0");
    if (mean.size() != degree + 1 || covariance.rows() != degree + 1 || covariance.cols() != degree + 1)
      throw InvalidArgument("BprPrior: mean/covariance size must be degree + 1");
    if (!(noise_variance > 0.0)) throw InvalidArgument("BprPrior: noise variance must be > 0");
  }

  /// Prior precision, via a Cholesky factor of the covariance.
  Eigen::MatrixXd precision() const { return factor_spd(covariance, "BPR prior covariance").inverse(); }
};

/// Posterior N(mean, covariance) after conditioning on (design, outputs).
struct BprPosterior {
  int degree = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double noise_variance = 1.0;
  Eigen::MatrixXd design;  // n x (degree + 1)
  Eigen::VectorXd outputs;

  /// Gaussian predictive at scalar x: mean <phi, mu_p>, variance sigma^2 + phi' Sigma_p phi.
  Prediction predict(double x) const {
    const Eigen::VectorXd phi = feature_map(x, degree);
    Prediction p;
    p.mean = phi.dot(mean);
    p.noise_variance = noise_variance;
    p.variance = noise_variance + std::max(0.0, phi.dot(covariance * phi));
    return p;
  }

  Prediction predict(const Eigen::VectorXd& x) const {
    if (x.size() != 1) throw InvalidArgument("BprPosterior: inputs must be one-dimensional");
    return predict(x(0));
  }
};

/// Sigma_p = (Sigma^-1 + Phi'Phi / sigma^2)^-1 for a given design matrix.
inline Eigen::MatrixXd posterior_covariance(const BprPrior& prior, const Eigen::MatrixXd& design) {
  prior.validate();
  if (design.cols() != prior.degree + 1) throw InvalidArgument("posterior_covariance: design has wrong width");
  if (design.rows() == 0) return prior.covariance;
  const Eigen::MatrixXd precision =
      symmetrize(prior.precision() + design.transpose() * design / prior.noise_variance);
  return factor_spd(precision, "BPR posterior precision").inverse();
}

/// Sigma_p = (Sigma^-1 + Phi'Phi / sigma^2)^-1,
/// mu_p = Sigma_p Sigma^-1 mu + Sigma_p Phi' y / sigma^2.
inline BprPosterior posterior_update(const BprPrior& prior, const Eigen::Ref<const Eigen::VectorXd>& xs,
                                     const Eigen::Ref<const Eigen::VectorXd>& ys) {
  prior.validate();
  if (xs.size() != ys.size()) throw InvalidArgument("posterior_update: |X| != |y|");
  BprPosterior post;
  post.degree = prior.degree;
  post.noise_variance = prior.noise_variance;
  post.design = design_matrix(xs, prior.degree);
  post.outputs = ys;
  if (xs.size() == 0) {
    post.mean = prior.mean;
    post.covariance = prior.covariance;
    return post;
  }
  const Eigen::MatrixXd prior_precision = prior.precision();
  const double inv_noise = 1.0 / prior.noise_variance;
  const Eigen::MatrixXd precision =
      symmetrize(prior_precision + inv_noise * post.design.transpose() * post.design);
  const SpdFactor f = factor_spd(precision, "BPR posterior precision");
  post.covariance = f.inverse();
  post.mean = f.solve(Eigen::VectorXd(prior_precision * prior.mean + inv_noise * post.design.transpose() * ys));
  return post;
}

inline Prediction predictive(const BprPosterior& post, double x) { return post.predict(x); }

/// Model factory for the AL loop: refits the conjugate posterior from scratch.
struct BprRegressor {
  BprPrior prior;

  BprPosterior fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
    if (x.rows() > 0 && x.cols() != 1) throw InvalidArgument("BprRegressor: inputs must be one-dimensional");
    if (x.rows() == 0) return posterior_update(prior, Eigen::VectorXd(0), y);
    return posterior_update(prior, x.col(0), y);
  }
};

}  // namespace ual

#endif  // UAL_BPR_HPP
