#ifndef UAL_ACQUISITION_HPP
#define UAL_ACQUISITION_HPP

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ual/error.hpp"
#include "ual/gpr.hpp"
#include "ual/model.hpp"
#include "ual/rng.hpp"
#include "ual/synthetic.hpp"

namespace ual {

enum class StrategyKind { variance, random, direct_mse, upper_bound };

inline const char* to_string(StrategyKind k) {
  switch (k) {
    case StrategyKind::variance: return "variance";
    case StrategyKind::random: return "random";
    case StrategyKind::direct_mse: return "direct_mse";
    case StrategyKind::upper_bound: return "upper_bound";
  }
  return "?";
}

/// Acquisition strategy and its parameters.
///
/// direct_mse and upper_bound fit a GP surrogate (zero mean, `surrogate_kernel`)
/// to D_L every step. upper_bound additionally needs a gradient bound L_f on
/// the target and a confidence level delta.
struct StrategySpec {
  StrategyKind kind = StrategyKind::variance;
  std::optional<KernelSpec> surrogate_kernel;
  std::optional<double> gradient_bound;
  double delta = 0.05;

  static StrategySpec variance() { return {StrategyKind::variance, std::nullopt, std::nullopt, 0.05}; }
  static StrategySpec random() { return {StrategyKind::random, std::nullopt, std::nullopt, 0.05}; }
  static StrategySpec direct_mse(KernelSpec k = KernelSpec::rbf(1.0, 0.5)) {
    return {StrategyKind::direct_mse, k, std::nullopt, 0.05};
  }
  static StrategySpec upper_bound(double gradient_bound, double delta = 0.05,
                                  KernelSpec k = KernelSpec::rbf(1.0, 0.5)) {
    return {StrategyKind::upper_bound, k, gradient_bound, delta};
  }

  std::string name() const { return to_string(kind); }

  void validate() const {
    if (kind == StrategyKind::direct_mse || kind == StrategyKind::upper_bound) {
      if (!surrogate_kernel) throw InvalidArgument(name() + ": surrogate kernel required");
      surrogate_kernel->validate();
    }
    if (kind == StrategyKind::upper_bound) {
      if (!gradient_bound || !(*gradient_bound >= 0.0))
        throw InvalidArgument("upper_bound: gradient bound must be given and >= 0");
      if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("upper_bound: delta must be in (0, 1)");
    }
  }
};

/// A(x) = sigma_p^2(x), the predictive variance.
template <PredictiveModel M>
double score_variance(const M& model, const Eigen::VectorXd& x) {
  return model.predict(x).variance;
}

/// Uniform draw over the active candidates.
inline std::size_t score_random(Rng& rng, const UnlabeledPool& pool) {
  if (pool.active_count() == 0) throw InvalidArgument("score_random: no active candidates");
  auto k = rng.index(pool.active_count());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    if (!pool.is_active(i)) continue;
    if (k == 0) return i;
    --k;
  }
  return pool.size();  // unreachable
}

/// A(x) = (g(x) - f_hat(x))^2 with g the surrogate GP posterior mean.
template <PredictiveModel M>
double score_direct_mse(const GpModel& surrogate, const M& predictor, const Eigen::VectorXd& x) {
  const double d = surrogate.posterior_mean(x) - predictor.predict(x).mean;
  return d * d;
}

/// Distance from x to the nearest labeled input (infinity if D_L is empty).
inline double fill_distance(const Eigen::VectorXd& x, const Eigen::MatrixXd& labeled_inputs) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < labeled_inputs.rows(); ++i)
    best = std::min(best, (labeled_inputs.row(i).transpose() - x).norm());
  return best;
}

/// sqrt(beta) with beta = 2 ln(N / delta).
inline double confidence_width(std::size_t pool_size, double delta) {
  return std::sqrt(2.0 * std::log(static_cast<double>(pool_size) / delta));
}

/// (B_f(x) + |m_D(x) - f_hat(x)|)^2 + sigma^2, where
/// B_f(x) = sqrt(2 ln(N/delta)) s_D(x) + L_f d_min(x, D_L).
template <PredictiveModel M>
double score_upper_bound(const GpModel& surrogate, const M& predictor, const Eigen::VectorXd& x,
                         const Eigen::MatrixXd& labeled_inputs, double gradient_bound, double delta,
                         std::size_t pool_size) {
  if (!(gradient_bound >= 0.0)) throw InvalidArgument("score_upper_bound: L_f must be >= 0");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidArgument("score_upper_bound: delta must be in (0, 1)");
  const Prediction g = surrogate.predict(x, false);
  const double spread = confidence_width(pool_size, delta) * std::sqrt(g.variance);
  const double dmin = labeled_inputs.rows() > 0 ? fill_distance(x, labeled_inputs) : 0.0;
  const double b = spread + gradient_bound * dmin + std::abs(g.mean - predictor.predict(x).mean);
  return b * b + surrogate.noise_variance();
}

/// Index of the largest score; the lowest index wins ties.
inline std::size_t argmax_lowest(std::span<const double> scores) {
  if (scores.empty()) throw InvalidArgument("argmax: empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best]) best = i;
  return best;
}

/// Pick the active candidate with the highest score. `scores[k]` belongs to
/// the k-th active candidate in increasing index order; the returned value is
/// the pool index. The caller deactivates it.
inline std::size_t select(const UnlabeledPool& pool, std::span<const double> scores) {
  if (pool.active_count() == 0) throw InvalidArgument("select: no active candidates");
  if (scores.size() != pool.active_count()) throw InvalidArgument("select: scores do not match active candidates");
  const auto active = pool.active_indices();
  return active[argmax_lowest(scores)];
}

}  // namespace ual

#endif  // UAL_ACQUISITION_HPP
