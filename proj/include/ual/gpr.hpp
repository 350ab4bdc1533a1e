#ifndef UAL_GPR_HPP
#define UAL_GPR_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <string>

#include <Eigen/Core>

#include "ual/error.hpp"
#include "ual/linalg.hpp"
#include "ual/model.hpp"

namespace ual {

enum class KernelKind { linear, rbf, matern52 };

inline const char* to_string(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::matern52: return "matern52";
  }
  return "?";
}

/// Covariance function. rbf/matern52 use amplitude and lengthscale; linear
/// uses bias and weight (k = bias + weight <x, x'>).
struct KernelSpec {
  KernelKind kind = KernelKind::rbf;
  double amplitude = 1.0;
  double lengthscale = 1.0;
  double bias = 1.0;
  double weight = 1.0;

  static KernelSpec rbf(double amplitude = 1.0, double lengthscale = 1.0) {
    return {KernelKind::rbf, amplitude, lengthscale, 0.0, 0.0};
  }
  static KernelSpec matern52(double amplitude = 1.0, double lengthscale = 1.0) {
    return {KernelKind::matern52, amplitude, lengthscale, 0.0, 0.0};
  }
  static KernelSpec linear(double bias = 1.0, double weight = 1.0) {
    return {KernelKind::linear, 0.0, 0.0, bias, weight};
  }

  void validate() const {
    if (kind == KernelKind::linear) {
      if (!(bias >= 0.0)) throw InvalidArgument("linear kernel: bias must be >= 0");
      if (!(weight > 0.0)) throw InvalidArgument("linear kernel: weight must be > 0");
    } else {
      if (!(amplitude > 0.0)) throw InvalidArgument("kernel: amplitude must be > 0");
      if (!(lengthscale > 0.0)) throw InvalidArgument("kernel: lengthscale must be > 0");
    }
  }
};

inline double kernel_eval(const KernelSpec& k, const Eigen::Ref<const Eigen::VectorXd>& a,
                          const Eigen::Ref<const Eigen::VectorXd>& b) {
  if (a.size() != b.size()) throw InvalidArgument("kernel_eval: dimension mismatch");
  switch (k.kind) {
    case KernelKind::linear:
      return k.bias + k.weight * a.dot(b);
    case KernelKind::rbf: {
      const double r2 = (a - b).squaredNorm();
      return k.amplitude * std::exp(-r2 / (2.0 * k.lengthscale * k.lengthscale));
    }
    case KernelKind::matern52: {
      const double s = std::sqrt(5.0) * (a - b).norm() / k.lengthscale;
      return k.amplitude * (1.0 + s + s * s / 3.0) * std::exp(-s);
    }
  }
  return 0.0;
}

/// Gram matrix between the rows of `a` and the rows of `b`.
inline Eigen::MatrixXd kernel_matrix(const KernelSpec& k, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  if (a.rows() > 0 && b.rows() > 0 && a.cols() != b.cols())
    throw InvalidArgument("kernel_matrix: dimension mismatch");
  Eigen::MatrixXd out(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.rows(); ++j) out(i, j) = kernel_eval(k, a.row(i).transpose(), b.row(j).transpose());
  return out;
}

/// Prior mean function m(x): zero or a constant.
struct MeanFunction {
  double value = 0.0;

  static MeanFunction zero() { return {0.0}; }
  static MeanFunction constant(double c) { return {c}; }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>&) const { return value; }
};

/// Exact GP posterior:
///   m_D(x) = m(x) + k*' (K + sigma^2 I)^-1 (y - m)
///   s_D(x) = k(x,x) - k*' (K + sigma^2 I)^-1 k*
class GpModel {
 public:
  GpModel(KernelSpec kernel, MeanFunction mean, Eigen::MatrixXd inputs, const Eigen::VectorXd& outputs,
          double noise_variance)
      : kernel_(kernel), mean_(mean), inputs_(std::move(inputs)), noise_variance_(noise_variance) {
    kernel_.validate();
    if (!(noise_variance_ >= 0.0)) throw InvalidArgument("gp_fit: noise variance must be >= 0");
    if (inputs_.rows() != outputs.size()) throw InvalidArgument("gp_fit: |X| != |y|");
    const Eigen::Index n = inputs_.rows();
    Eigen::MatrixXd gram = kernel_matrix(kernel_, inputs_, inputs_);
    gram.diagonal().array() += noise_variance_;
    factor_ = factor_spd(gram, "GP covariance (K + sigma^2 I)");
    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) resid(i) = outputs(i) - mean_(inputs_.row(i).transpose());
    centered_ = resid;
    alpha_ = n > 0 ? factor_.solve(resid) : Eigen::VectorXd(0);
  }

  const KernelSpec& kernel() const { return kernel_; }
  const MeanFunction& mean_function() const { return mean_; }
  const Eigen::MatrixXd& inputs() const { return inputs_; }
  const Eigen::VectorXd& weights() const { return alpha_; }
  double noise_variance() const { return noise_variance_; }
  double jitter() const { return factor_.jitter; }
  Eigen::Index size() const { return inputs_.rows(); }

  double posterior_mean(const Eigen::VectorXd& x) const {
    double m = mean_(x);
    if (size() == 0) return m;
    return m + cross(x).dot(alpha_);
  }

  double latent_variance(const Eigen::VectorXd& x) const {
    const double prior = kernel_eval(kernel_, x, x);
    if (size() == 0) return prior;
    const Eigen::VectorXd v = factor_.llt.matrixL().solve(cross(x));
    return std::max(0.0, prior - v.squaredNorm());
  }

  /// Predictive distribution; `include_noise` adds sigma^2 to the variance.
  Prediction predict(const Eigen::VectorXd& x, bool include_noise) const {
    Prediction p;
    const double prior = kernel_eval(kernel_, x, x);
    if (size() == 0) {
      p.mean = mean_(x);
      p.variance = prior;
    } else {
      const Eigen::VectorXd ks = cross(x);
      p.mean = mean_(x) + ks.dot(alpha_);
      const Eigen::VectorXd v = factor_.llt.matrixL().solve(ks);
      p.variance = std::max(0.0, prior - v.squaredNorm());
    }
    if (include_noise) {
      p.variance += noise_variance_;
      p.noise_variance = noise_variance_;
    }
    return p;
  }

  Prediction predict(const Eigen::VectorXd& x) const { return predict(x, true); }

  /// log p(y | X) under the GP prior.
  double log_marginal_likelihood() const {
    const Eigen::Index n = size();
    if (n == 0) return 0.0;
    const auto& l = factor_.llt.matrixLLT();
    double logdet = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(l(i, i));
    return -0.5 * centered_.dot(alpha_) - logdet - 0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
  }

 private:
  Eigen::VectorXd cross(const Eigen::VectorXd& x) const {
    if (x.size() != inputs_.cols()) throw InvalidArgument("GpModel: query dimension mismatch");
    Eigen::VectorXd ks(size());
    for (Eigen::Index i = 0; i < size(); ++i) ks(i) = kernel_eval(kernel_, inputs_.row(i).transpose(), x);
    return ks;
  }

  KernelSpec kernel_;
  MeanFunction mean_;
  Eigen::MatrixXd inputs_;
  double noise_variance_;
  SpdFactor factor_;
  Eigen::VectorXd centered_;
  Eigen::VectorXd alpha_;
};

inline GpModel gp_fit(const KernelSpec& k, const MeanFunction& mean, const Eigen::MatrixXd& x,
                      const Eigen::VectorXd& y, double noise_variance) {
  return GpModel(k, mean, x, y, noise_variance);
}

inline Prediction gp_predict(const GpModel& model, const Eigen::VectorXd& x, bool include_noise = true) {
  return model.predict(x, include_noise);
}

/// Grid search over lengthscales by log marginal likelihood (rbf/matern52).
/// Ties keep the earlier grid entry.
inline KernelSpec select_lengthscale(KernelSpec k, const MeanFunction& mean, const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y, double noise_variance,
                                     std::span<const double> grid) {
  if (k.kind == KernelKind::linear || grid.empty() || x.rows() == 0) return k;
  double best = -std::numeric_limits<double>::infinity();
  KernelSpec best_k = k;
  for (double l : grid) {
    KernelSpec cand = k;
    cand.lengthscale = l;
    const double lml = gp_fit(cand, mean, x, y, noise_variance).log_marginal_likelihood();
    if (lml > best) {
      best = lml;
      best_k = cand;
    }
  }
  return best_k;
}

/// Model factory for the AL loop: refits the GP from scratch on every call.
struct GpRegressor {
  KernelSpec kernel;
  MeanFunction mean = MeanFunction::zero();
  double noise_variance = 1.0;

  GpModel fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) const {
    return gp_fit(kernel, mean, x, y, noise_variance);
  }
};

}  // namespace ual

#endif  // UAL_GPR_HPP
