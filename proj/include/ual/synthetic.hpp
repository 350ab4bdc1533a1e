#ifndef UAL_SYNTHETIC_HPP
#define UAL_SYNTHETIC_HPP

#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ual/error.hpp"
#include "ual/rng.hpp"

namespace ual {

enum class TargetKind { pure_polynomial, polynomial_plus_cosine };

/// f(x) = sum_i w_i x^i  [+ A cos(2 pi nu x)], observed with N(0, sigma^2) noise.
struct GroundTruthTarget {
  TargetKind kind = TargetKind::pure_polynomial;
  Eigen::VectorXd coefficients;  // length order + 1, lowest power first
  double cosine_amplitude = 0.0;
  double cosine_frequency = 0.0;  // cycles per unit x
  double noise_variance = 1.0;

  int order() const { return static_cast<int>(coefficients.size()) - 1; }

  void validate() const {
    if (coefficients.size() == 0) throw InvalidArgument("target: empty coefficient vector");
    if (!(noise_variance >= 0.0)) throw InvalidArgument("target: noise variance must be >= 0");
    if (kind == TargetKind::pure_polynomial && cosine_amplitude != 0.0)
      throw InvalidArgument("target: pure polynomial with nonzero cosine amplitude");
  }
};

/// Draw w ~ N(0, I) of length order + 1. The cosine variant uses cos(2 pi x).
inline GroundTruthTarget sample_target(int order, Rng& rng,
                                       TargetKind kind = TargetKind::pure_polynomial,
                                       double noise_variance = 1.0,
                                       double cosine_amplitude = 1.0,
                                       double cosine_frequency = 1.0) {
  if (order < 0) throw InvalidArgument("sample_target: order must be >= 0");
  GroundTruthTarget t;
  t.kind = kind;
  t.coefficients.resize(order + 1);
  for (int i = 0; i <= order; ++i) t.coefficients(i) = rng.normal();
  if (kind == TargetKind::polynomial_plus_cosine) {
    t.cosine_amplitude = cosine_amplitude;
    t.cosine_frequency = cosine_frequency;
  }
  t.noise_variance = noise_variance;
  t.validate();
  return t;
}

/// Noiseless f(x).
inline double eval_target(const GroundTruthTarget& t, double x) {
  double acc = 0.0;
  for (Eigen::Index i = t.coefficients.size() - 1; i >= 0; --i) acc = acc * x + t.coefficients(i);
  if (t.kind == TargetKind::polynomial_plus_cosine)
    acc += t.cosine_amplitude * std::cos(2.0 * std::numbers::pi * t.cosine_frequency * x);
  return acc;
}

/// y = f(x) + eps, eps ~ N(0, sigma^2).
inline double observe(const GroundTruthTarget& t, double x, Rng& rng) {
  const double f = eval_target(t, x);
  if (t.noise_variance == 0.0) return f;
  return f + std::sqrt(t.noise_variance) * rng.normal();
}

/// Upper bound on |f'(x)| over [lo, hi]: polynomial part bounded term by term,
/// plus 2 pi A nu for the cosine.
inline double gradient_bound(const GroundTruthTarget& t, double lo, double hi) {
  const double r = std::max(std::abs(lo), std::abs(hi));
  double bound = 0.0;
  for (Eigen::Index i = 1; i < t.coefficients.size(); ++i)
    bound += static_cast<double>(i) * std::abs(t.coefficients(i)) * std::pow(r, static_cast<double>(i - 1));
  if (t.kind == TargetKind::polynomial_plus_cosine)
    bound += 2.0 * std::numbers::pi * std::abs(t.cosine_amplitude * t.cosine_frequency);
  return bound;
}

/// Labeled data D_L. Rows of `inputs` are points.
struct LabeledSet {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd outputs;

  LabeledSet() = default;
  explicit LabeledSet(Eigen::Index dim) : inputs(0, dim), outputs(0) {}
  LabeledSet(Eigen::MatrixXd x, Eigen::VectorXd y) : inputs(std::move(x)), outputs(std::move(y)) {
    if (inputs.rows() != outputs.size()) throw InvalidArgument("LabeledSet: inputs/outputs length mismatch");
  }

  Eigen::Index size() const { return outputs.size(); }
  Eigen::Index dim() const { return inputs.cols(); }

  void append(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) {
    if (inputs.cols() == 0 && inputs.rows() == 0) inputs.resize(0, x.size());
    if (x.size() != inputs.cols()) throw InvalidArgument("LabeledSet::append: dimension mismatch");
    const Eigen::Index n = outputs.size();
    inputs.conservativeResize(n + 1, Eigen::NoChange);
    inputs.row(n) = x;
    outputs.conservativeResize(n + 1);
    outputs(n) = y;
  }
};

/// Unlabeled candidate pool D_U. Deactivation is one-way.
class UnlabeledPool {
 public:
  UnlabeledPool() = default;
  explicit UnlabeledPool(Eigen::MatrixXd candidates)
      : candidates_(std::move(candidates)),
        active_(static_cast<std::size_t>(candidates_.rows()), true),
        n_active_(static_cast<std::size_t>(candidates_.rows())) {}

  std::size_t size() const { return active_.size(); }
  std::size_t active_count() const { return n_active_; }
  Eigen::Index dim() const { return candidates_.cols(); }
  bool is_active(std::size_t i) const { return active_.at(i); }
  const Eigen::MatrixXd& candidates() const { return candidates_; }
  auto candidate(std::size_t i) const { return candidates_.row(static_cast<Eigen::Index>(i)); }

  void deactivate(std::size_t i) {
    if (!active_.at(i)) throw InvalidArgument("UnlabeledPool: candidate already removed");
    active_[i] = false;
    --n_active_;
  }

  /// Indices of active candidates in increasing order.
  std::vector<std::size_t> active_indices() const {
    std::vector<std::size_t> out;
    out.reserve(n_active_);
    for (std::size_t i = 0; i < active_.size(); ++i)
      if (active_[i]) out.push_back(i);
    return out;
  }

 private:
  Eigen::MatrixXd candidates_;
  std::vector<bool> active_;
  std::size_t n_active_ = 0;
};

/// Evenly spaced 1-d pool on [lo, hi], endpoints included.
inline UnlabeledPool build_pool(std::size_t n, double lo, double hi) {
  if (n < 2) throw InvalidArgument("build_pool: need n >= 2");
  if (!(lo < hi)) throw InvalidArgument("build_pool: need lo < hi");
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 1);
  const double step = (hi - lo) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(i), 0) = lo + static_cast<double>(i) * step;
  x(static_cast<Eigen::Index>(n - 1), 0) = hi;
  return UnlabeledPool(std::move(x));
}

/// Holdout data. `clean` is f(x) and only exists for synthetic targets.
struct TestSet {
  Eigen::MatrixXd inputs;
  Eigen::VectorXd observed;
  std::optional<Eigen::VectorXd> clean;

  Eigen::Index size() const { return observed.size(); }
};

enum class TestLayout { uniform_random, even_grid };

inline TestSet build_test_set(std::size_t n, double lo, double hi, const GroundTruthTarget& target,
                              Rng& rng, TestLayout layout = TestLayout::uniform_random) {
  if (n < 1) throw InvalidArgument("build_test_set: need n >= 1");
  if (!(lo < hi)) throw InvalidArgument("build_test_set: need lo < hi");
  const auto m = static_cast<Eigen::Index>(n);
  TestSet t;
  t.inputs.resize(m, 1);
  if (layout == TestLayout::uniform_random) {
    for (Eigen::Index i = 0; i < m; ++i) t.inputs(i, 0) = rng.uniform(lo, hi);
  } else {
    for (Eigen::Index i = 0; i < m; ++i)
      t.inputs(i, 0) = m == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(m - 1);
  }
  Eigen::VectorXd clean(m);
  t.observed.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    clean(i) = eval_target(target, t.inputs(i, 0));
    t.observed(i) = observe(target, t.inputs(i, 0), rng);
  }
  t.clean = std::move(clean);
  return t;
}

}  // namespace ual

#endif  // UAL_SYNTHETIC_HPP
