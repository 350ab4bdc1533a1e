#ifndef UAL_ANALYSIS_HPP
#define UAL_ANALYSIS_HPP

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>

#include <Eigen/Core>

#include "ual/bpr.hpp"
#include "ual/error.hpp"
#include "ual/linalg.hpp"
#include "ual/rng.hpp"

namespace ual {

/// Uncertainty class of ground truths: f(x) = <phi(x, l), w>, w ~ N(mean, covariance),
/// observed with N(0, noise_variance) noise.
struct TargetFamily {
  int order = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  double noise_variance = 1.0;

  static TargetFamily isotropic(int order, double noise_variance = 1.0) {
    TargetFamily f;
    f.order = order;
    f.mean = Eigen::VectorXd::Zero(order + 1);
    f.covariance = Eigen::MatrixXd::Identity(order + 1, order + 1);
    f.noise_variance = noise_variance;
    return f;
  }

  void validate() const {
    if (order < 0) throw InvalidArgument("TargetFamily: order must be >= 0");
    if (mean.size() != order + 1 || covariance.rows() != order + 1 || covariance.cols() != order + 1)
      throw InvalidArgument("TargetFamily: mean/covariance size must be order + 1");
    if (!(noise_variance > 0.0)) throw InvalidArgument("TargetFamily: noise variance must be > 0");
    factor_spd(covariance, "target family covariance");
  }
};

/// The nine terms of the closed-form MSE at one x, in the order
///   (phi^l)'(mu mu' + Sigma)phi^l,
///   -2 (phi^p)'S_p S^-1 mu^ mu' phi^l,
///   -(2/s2) (phi^p)'S_p Phi^' Phi (mu mu' + Sigma) phi^l,
///   (phi^p)'S_p S^-1 mu^ mu^' S^-1 S_p phi^p,
///   (1/s2) (phi^p)'S_p S^-1 mu^ mu' Phi' Phi^ S_p phi^p,
///   (1/s2) (phi^p)'S_p Phi^' Phi mu mu^' S^-1 S_p phi^p,
///   (1/s4) (phi^p)'S_p Phi^' Phi (mu mu' + Sigma) Phi' Phi^ S_p phi^p,
///   (1/s2) (phi^p)'S_p Phi^' Phi^ S_p phi^p,
///   (phi^p)'S_p phi^p
/// where S = prior covariance, mu^ = prior mean, S_p = posterior covariance,
/// Phi = target-order design, Phi^ = model-order design.
struct MseTerms {
  std::array<double, 9> terms{};

  double total() const { return std::accumulate(terms.begin(), terms.end(), 0.0); }
};

inline MseTerms closed_form_mse_terms(double x, const TargetFamily& family, const BprPrior& prior,
                                      const Eigen::MatrixXd& target_design, const Eigen::MatrixXd& model_design) {
  family.validate();
  prior.validate();
  const int l = family.order;
  const int p = prior.degree;
  if (target_design.cols() != l + 1) throw InvalidArgument("closed_form_mse: Phi must have l + 1 columns");
  if (model_design.cols() != p + 1) throw InvalidArgument("closed_form_mse: Phi^ must have p + 1 columns");
  if (target_design.rows() != model_design.rows())
    throw InvalidArgument("closed_form_mse: Phi and Phi^ must have the same number of rows");
  if (std::abs(family.noise_variance - prior.noise_variance) > 1e-12 * std::max(1.0, family.noise_variance))
    throw InvalidArgument("closed_form_mse: family and prior noise variances differ");

  const double s2 = prior.noise_variance;
  const Eigen::VectorXd phi_l = feature_map(x, l);
  const Eigen::VectorXd phi_p = feature_map(x, p);
  const Eigen::MatrixXd sp = posterior_covariance(prior, model_design);
  const Eigen::MatrixXd sinv = prior.precision();
  const Eigen::VectorXd& mu = family.mean;
  const Eigen::VectorXd& mu_hat = prior.mean;
  const Eigen::MatrixXd second_moment = mu * mu.transpose() + family.covariance;
  const Eigen::MatrixXd cross = model_design.transpose() * target_design;  // Phi^' Phi, (p+1) x (l+1)

  const Eigen::RowVectorXd lhs = phi_p.transpose() * sp;  // (phi^p)' S_p
  const double shrink = lhs * sinv * mu_hat;               // (phi^p)' S_p S^-1 mu^

  MseTerms out;
  auto& t = out.terms;
  t[0] = phi_l.dot(second_moment * phi_l);
  t[1] = -2.0 * shrink * mu.dot(phi_l);
  t[2] = -(2.0 / s2) * (lhs * cross * second_moment * phi_l).value();
  t[3] = shrink * (mu_hat.transpose() * sinv * sp * phi_p).value();
  t[4] = (1.0 / s2) * shrink * (mu.transpose() * cross.transpose() * sp * phi_p).value();
  t[5] = (1.0 / s2) * (lhs * cross * mu).value() * (mu_hat.transpose() * sinv * sp * phi_p).value();
  t[6] = (1.0 / (s2 * s2)) * (lhs * cross * second_moment * cross.transpose() * sp * phi_p).value();
  t[7] = (1.0 / s2) * (lhs * model_design.transpose() * model_design * sp * phi_p).value();
  t[8] = (lhs * phi_p).value();
  return out;
}

/// Expected squared error of the BPR posterior predictive against f, averaged
/// over w in the family and the training noise, for fixed training inputs.
inline double closed_form_mse(double x, const TargetFamily& family, const BprPrior& prior,
                              const Eigen::MatrixXd& target_design, const Eigen::MatrixXd& model_design) {
  return closed_form_mse_terms(x, family, prior, target_design, model_design).total();
}

/// Convenience overload building both design matrices from the inputs.
inline double closed_form_mse(double x, const TargetFamily& family, const BprPrior& prior,
                              const Eigen::VectorXd& inputs) {
  return closed_form_mse(x, family, prior, design_matrix(inputs, family.order), design_matrix(inputs, prior.degree));
}

/// 2 (phi^p)' S_p phi^p, which equals the closed form when the model matches the family.
inline double matched_mse(double x, const BprPosterior& posterior) {
  const Eigen::VectorXd phi = feature_map(x, posterior.degree);
  return 2.0 * phi.dot(posterior.covariance * phi);
}

/// Block split of a target family against a lower-order model p < l:
/// complement = powers p+1..l, model = powers 0..p.
struct LowerOrderPartition {
  int target_order = 0;
  int model_order = 0;
  Eigen::MatrixXd complement_design;  // n x (l - p)
  Eigen::MatrixXd model_design;       // n x (p + 1)
  Eigen::VectorXd complement_mean;    // l - p
  Eigen::VectorXd model_mean;         // p + 1
  Eigen::MatrixXd complement_cov;     // (l - p) x (l - p)
  Eigen::MatrixXd cross_cov;          // (l - p) x (p + 1)
  Eigen::MatrixXd model_cov;          // (p + 1) x (p + 1)
  double noise_variance = 1.0;

  int complement_size() const { return target_order - model_order; }

  /// [x^{p+1}, ..., x^l]
  Eigen::VectorXd complement_features(double x) const {
    return feature_map(x, target_order).tail(complement_size());
  }
  Eigen::VectorXd model_features(double x) const { return feature_map(x, model_order); }

  /// Recombined objects in natural power order 0..l.
  struct Whole {
    Eigen::MatrixXd design;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd features;
  };

  Whole reassemble(double x) const {
    const int c = complement_size();
    const int m = model_order + 1;
    Whole w;
    w.design.resize(model_design.rows(), c + m);
    w.design << model_design, complement_design;
    w.mean.resize(c + m);
    w.mean << model_mean, complement_mean;
    w.covariance.resize(c + m, c + m);
    w.covariance.topLeftCorner(m, m) = model_cov;
    w.covariance.topRightCorner(m, c) = cross_cov.transpose();
    w.covariance.bottomLeftCorner(c, m) = cross_cov;
    w.covariance.bottomRightCorner(c, c) = complement_cov;
    w.features.resize(c + m);
    w.features << model_features(x), complement_features(x);
    return w;
  }
};

inline LowerOrderPartition partition_family(const TargetFamily& family, const Eigen::VectorXd& inputs,
                                            int model_order) {
  family.validate();
  if (model_order < 0 || model_order > family.order)
    throw InvalidArgument("partition_family: need 0 <= p <= l");
  const int l = family.order;
  const int m = model_order + 1;
  const int c = l - model_order;
  const Eigen::MatrixXd design = design_matrix(inputs, l);
  LowerOrderPartition part;
  part.target_order = l;
  part.model_order = model_order;
  part.model_design = design.leftCols(m);
  part.complement_design = design.rightCols(c);
  part.model_mean = family.mean.head(m);
  part.complement_mean = family.mean.tail(c);
  part.model_cov = family.covariance.topLeftCorner(m, m);
  part.complement_cov = family.covariance.bottomRightCorner(c, c);
  part.cross_cov = family.covariance.bottomLeftCorner(c, m);
  part.noise_variance = family.noise_variance;
  return part;
}

struct LowerOrderMse {
  double total = 0.0;
  double p_term = 0.0;    // P(x): everything except 2 Var(x)
  double var_term = 0.0;  // Var(x) = (phi^p)' S_p phi^p
  std::array<double, 6> terms{};
};

/// Closed-form MSE of a lower-order model under the assumption that the
/// model prior equals the model block of the family (mu~ = mu^, Sigma~ = Sigma^).
inline LowerOrderMse lower_order_mse(double x, const LowerOrderPartition& part, const BprPrior& prior,
                                     double noise_variance) {
  prior.validate();
  if (prior.degree != part.model_order) throw InvalidArgument("lower_order_mse: prior degree != partition model order");
  const double tol = 1e-12;
  if ((prior.mean - part.model_mean).cwiseAbs().maxCoeff() > tol ||
      (prior.covariance - part.model_cov).cwiseAbs().maxCoeff() > tol)
    throw InvalidArgument("lower_order_mse: prior differs from the family's model block");
  if (std::abs(prior.noise_variance - noise_variance) > tol * std::max(1.0, noise_variance))
    throw InvalidArgument("lower_order_mse: prior noise variance differs from sigma^2");

  const double s2 = noise_variance;
  const Eigen::VectorXd phi_c = part.complement_features(x);
  const Eigen::VectorXd phi_p = part.model_features(x);
  const Eigen::MatrixXd sp = posterior_covariance(prior, part.model_design);
  const Eigen::MatrixXd sinv = prior.precision();
  const Eigen::MatrixXd mc = part.complement_cov + part.complement_mean * part.complement_mean.transpose();
  const Eigen::MatrixXd cross = part.model_design.transpose() * part.complement_design;  // Phi^' Phi~_c
  const Eigen::RowVectorXd lhs = phi_p.transpose() * sp;

  LowerOrderMse out;
  auto& t = out.terms;
  t[0] = phi_c.dot(mc * phi_c);
  t[1] = -(2.0 / s2) * (lhs * cross * mc * phi_c).value();
  t[2] = 2.0 * (lhs * sinv * part.cross_cov.transpose() * phi_c).value();
  t[3] = (1.0 / (s2 * s2)) * (lhs * cross * mc * cross.transpose() * sp * phi_p).value();
  t[4] = -(2.0 / s2) * (lhs * cross * part.cross_cov * sinv * sp * phi_p).value();
  t[5] = 2.0 * (lhs * phi_p).value();
  out.var_term = (lhs * phi_p).value();
  out.p_term = t[0] + t[1] + t[2] + t[3] + t[4];
  out.total = out.p_term + t[5];
  return out;
}

enum class DecompositionMethod { closed_form, monte_carlo };

struct DecompositionReport {
  double x = 0.0;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  DecompositionMethod method = DecompositionMethod::monte_carlo;
  std::size_t sample_count = 0;
  double bias_stderr = 0.0;
};

/// Monte-Carlo bias/variance of BPR at x. Each sample draws w from the family
/// and n_train inputs uniformly on [lo, hi]. Bias is the squared gap between
/// f(x) and the posterior-mean prediction averaged over training noise (which
/// is linear in y, so the noise average is taken exactly); variance is the
/// exact (phi^p)' S_p phi^p. mse = bias + variance.
inline DecompositionReport mc_bias_variance(double x, const TargetFamily& family, const BprPrior& prior,
                                            std::size_t n_train, std::size_t n_mc, Rng& rng, double lo = -2.0,
                                            double hi = 2.0) {
  family.validate();
  prior.validate();
  if (n_mc < 1000) throw InvalidArgument("mc_bias_variance: need n_mc >= 1000");
  const Eigen::MatrixXd chol_w = factor_spd(family.covariance, "target family covariance").llt.matrixL();
  const Eigen::MatrixXd sinv = prior.precision();
  const Eigen::VectorXd phi_l = feature_map(x, family.order);
  const Eigen::VectorXd phi_p = feature_map(x, prior.degree);
  const auto n = static_cast<Eigen::Index>(n_train);

  double sum_b = 0.0, sum_b2 = 0.0, sum_v = 0.0;
  Eigen::VectorXd z(family.order + 1), xs(n);
  for (std::size_t s = 0; s < n_mc; ++s) {
    for (Eigen::Index i = 0; i <= family.order; ++i) z(i) = rng.normal();
    const Eigen::VectorXd w = family.mean + chol_w * z;
    for (Eigen::Index i = 0; i < n; ++i) xs(i) = rng.uniform(lo, hi);
    const Eigen::MatrixXd model_design = design_matrix(xs, prior.degree);
    const Eigen::MatrixXd sp = posterior_covariance(prior, model_design);
    const Eigen::VectorXd clean = design_matrix(xs, family.order) * w;
    const Eigen::VectorXd mean_pred =
        sp * (sinv * prior.mean + model_design.transpose() * clean / prior.noise_variance);
    const double gap = phi_l.dot(w) - phi_p.dot(mean_pred);
    sum_b += gap * gap;
    sum_b2 += gap * gap * gap * gap;
    sum_v += phi_p.dot(sp * phi_p);
  }
  const double m = static_cast<double>(n_mc);
  DecompositionReport r;
  r.x = x;
  r.method = DecompositionMethod::monte_carlo;
  r.sample_count = n_mc;
  r.bias = sum_b / m;
  r.variance = sum_v / m;
  r.mse = r.bias + r.variance;
  r.bias_stderr = std::sqrt(std::max(0.0, sum_b2 / m - r.bias * r.bias) / (m - 1.0));
  return r;
}

/// |closed-form MSE - 2 (sigma_p^2(x) - sigma^2)| for fixed training inputs.
inline double variance_identity_gap(double x, const TargetFamily& family, const BprPrior& prior,
                               const Eigen::VectorXd& inputs) {
  const double mse = closed_form_mse(x, family, prior, inputs);
  const BprPosterior post = posterior_update(prior, inputs, Eigen::VectorXd::Zero(inputs.size()));
  const Prediction pred = post.predict(x);
  return std::abs(mse - 2.0 * (pred.variance - prior.noise_variance));
}

struct GaussianDensity {
  double mean = 0.0;
  double variance = 1.0;

  double log_pdf(double y) const {
    const double d = y - mean;
    return -0.5 * d * d / variance - 0.5 * std::log(2.0 * std::numbers::pi * variance);
  }
  double cdf(double y) const { return 0.5 * std::erfc(-(y - mean) / std::sqrt(2.0 * variance)); }
  /// E|Y| (folded normal mean).
  double mean_abs() const {
    const double s = std::sqrt(variance);
    return s * std::sqrt(2.0 / std::numbers::pi) * std::exp(-mean * mean / (2.0 * variance)) +
           mean * (1.0 - std::erfc(mean / (s * std::sqrt(2.0))));
  }
};

struct BiasBoundReport {
  double c = 0.0;        // E_p|Y|
  double epsilon = 0.0;  // sup |pi*/p - 1| on [-trunc, trunc]
  double bias_sq = 0.0;  // (m1 - m2)^2
  double bound = 0.0;    // epsilon^2 C^2
  bool holds = false;
};

/// Checks bias^2 <= eps^2 C^2 for a predictive pi* against the true p(Y|X).
/// The density ratio of Gaussians with unequal variances is unbounded on the
/// real line, so eps is the sup over [-trunc, trunc]; both densities must put
/// at least 1 - 1e-6 of their mass inside.
inline BiasBoundReport bias_bound_check(const GaussianDensity& predictive, const GaussianDensity& truth, double trunc,
                               std::size_t grid_points = 20001) {
  if (!(predictive.variance > 0.0 && truth.variance > 0.0)) throw InvalidArgument("bias_bound_check: variances must be > 0");
  if (!(trunc > 0.0) || grid_points < 2) throw InvalidArgument("bias_bound_check: need trunc > 0 and >= 2 grid points");
  for (const auto* g : {&predictive, &truth}) {
    const double mass = g->cdf(trunc) - g->cdf(-trunc);
    if (mass < 1.0 - 1e-6) throw InvalidArgument("bias_bound_check: truncation domain misses more than 1e-6 of the mass");
  }
  BiasBoundReport r;
  r.c = truth.mean_abs();
  for (std::size_t i = 0; i < grid_points; ++i) {
    const double y = -trunc + 2.0 * trunc * static_cast<double>(i) / static_cast<double>(grid_points - 1);
    const double ratio = std::exp(predictive.log_pdf(y) - truth.log_pdf(y));
    r.epsilon = std::max(r.epsilon, std::abs(ratio - 1.0));
  }
  const double d = predictive.mean - truth.mean;
  r.bias_sq = d * d;
  r.bound = r.epsilon * r.epsilon * r.c * r.c;
  r.holds = r.bias_sq <= r.bound;
  return r;
}

struct ConcentrationReport {
  std::size_t trials = 0;
  std::size_t improved = 0;  // trials where ||mu_p - w|| shrank from n_small to n_large
  double mean_error_small = 0.0;
  double mean_error_large = 0.0;
};

/// Posterior concentration around the true coefficients for a matched model:
/// w ~ N(0, I), inputs uniform on [lo, hi], y = Phi w + noise.
inline ConcentrationReport posterior_concentration(int order, std::size_t n_small, std::size_t n_large,
                                                   std::size_t trials, double noise_variance, Rng& rng,
                                                   double lo = -2.0, double hi = 2.0) {
  if (n_small > n_large) throw InvalidArgument("posterior_concentration: n_small > n_large");
  const BprPrior prior = BprPrior::isotropic(order, 1.0, noise_variance);
  ConcentrationReport r;
  r.trials = trials;
  const auto nl = static_cast<Eigen::Index>(n_large);
  const auto ns = static_cast<Eigen::Index>(n_small);
  for (std::size_t t = 0; t < trials; ++t) {
    Eigen::VectorXd w(order + 1);
    for (int i = 0; i <= order; ++i) w(i) = rng.normal();
    Eigen::VectorXd xs(nl), ys(nl);
    for (Eigen::Index i = 0; i < nl; ++i) {
      xs(i) = rng.uniform(lo, hi);
      ys(i) = feature_map(xs(i), order).dot(w) + std::sqrt(noise_variance) * rng.normal();
    }
    const double e_small = (posterior_update(prior, xs.head(ns), ys.head(ns)).mean - w).norm();
    const double e_large = (posterior_update(prior, xs, ys).mean - w).norm();
    r.mean_error_small += e_small / static_cast<double>(trials);
    r.mean_error_large += e_large / static_cast<double>(trials);
    if (e_large < e_small) ++r.improved;
  }
  return r;
}

}  // namespace ual

#endif  // UAL_ANALYSIS_HPP
