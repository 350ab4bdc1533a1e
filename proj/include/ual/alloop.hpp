#ifndef UAL_ALLOOP_HPP
#define UAL_ALLOOP_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ual/acquisition.hpp"
#include "ual/error.hpp"
#include "ual/gpr.hpp"
#include "ual/model.hpp"
#include "ual/rng.hpp"
#include "ual/synthetic.hpp"

namespace ual {

/// Noisy labels from a synthetic target. The noise of pool candidate i is
/// drawn from its own stream, so a candidate has the same label no matter
/// which strategy queries it or when.
struct SyntheticOracle {
  GroundTruthTarget target;
  std::uint64_t noise_seed = 0;

  double label(std::size_t index, const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
    Rng rng = Rng::derive(noise_seed, {static_cast<std::uint64_t>(index)});
    return observe(target, x(0), rng);
  }
};

/// Stored labels of a real dataset, indexed by pool row.
struct TableOracle {
  Eigen::VectorXd labels;

  double label(std::size_t index, const Eigen::Ref<const Eigen::RowVectorXd>&) const {
    if (static_cast<Eigen::Index>(index) >= labels.size()) throw InvalidArgument("TableOracle: index out of range");
    return labels(static_cast<Eigen::Index>(index));
  }
};

using LabelOracle = std::variant<SyntheticOracle, TableOracle>;

inline double query_label(const LabelOracle& oracle, std::size_t index,
                          const Eigen::Ref<const Eigen::RowVectorXd>& x) {
  return std::visit([&](const auto& o) { return o.label(index, x); }, oracle);
}

enum class MseMode { vs_observed, vs_clean };

/// Mean over test points of the posterior expected squared error,
/// (target - mean)^2 + latent variance.
template <PredictiveModel M>
double test_mse(const M& model, const TestSet& test, MseMode mode) {
  if (test.size() == 0) throw InvalidArgument("test_mse: empty test set");
  if (mode == MseMode::vs_clean && !test.clean) throw InvalidArgument("test_mse: vs_clean needs clean outputs");
  const Eigen::VectorXd& target = mode == MseMode::vs_clean ? *test.clean : test.observed;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const Prediction p = model.predict(Eigen::VectorXd(test.inputs.row(i).transpose()));
    const double e = target(i) - p.mean;
    acc += e * e + p.latent_variance();
  }
  return acc / static_cast<double>(test.size());
}

/// Test-set averages of the squared error of the posterior mean and of the
/// posterior (latent) variance; they sum to test_mse.
struct TestDecomposition {
  double bias = 0.0;
  double variance = 0.0;
};

template <PredictiveModel M>
TestDecomposition test_decomposition(const M& model, const TestSet& test, MseMode mode) {
  if (test.size() == 0) throw InvalidArgument("test_decomposition: empty test set");
  if (mode == MseMode::vs_clean && !test.clean) throw InvalidArgument("test_decomposition: vs_clean needs clean outputs");
  const Eigen::VectorXd& target = mode == MseMode::vs_clean ? *test.clean : test.observed;
  TestDecomposition d;
  for (Eigen::Index i = 0; i < test.size(); ++i) {
    const Prediction p = model.predict(Eigen::VectorXd(test.inputs.row(i).transpose()));
    const double e = target(i) - p.mean;
    d.bias += e * e;
    d.variance += p.latent_variance();
  }
  d.bias /= static_cast<double>(test.size());
  d.variance /= static_cast<double>(test.size());
  return d;
}

struct StepRecord {
  std::size_t step = 0;
  std::size_t n_labeled = 0;
  std::optional<std::size_t> chosen_index;  // pool index; empty at step 0
  double chosen_x = std::numeric_limits<double>::quiet_NaN();
  double test_mse = 0.0;
  std::optional<double> mc_bias;
  std::optional<double> mc_variance;
};

struct RunTrace {
  std::string model;
  std::string strategy;
  std::vector<StepRecord> steps;
  LabeledSet labeled;  // final D_L, rows in acquisition order
  bool terminal = false;
};

struct RunOptions {
  MseMode mode = MseMode::vs_clean;
  bool record_decomposition = false;
  double surrogate_noise_variance = 1.0;
  std::string model_id;
};

/// Pool-based active learning: score, select, query, refit, evaluate.
/// Step 0 records the model fit on `labeled` before any acquisition.
template <ModelFactory F>
RunTrace run_al(const F& factory, const StrategySpec& strategy, const LabelOracle& oracle, LabeledSet labeled,
                UnlabeledPool pool, const TestSet& test, std::size_t budget, Rng& rng, const RunOptions& opts = {}) {
  strategy.validate();
  if (labeled.size() == 0) throw InvalidArgument("run_al: initial labeled set must be nonempty");
  if (budget > pool.active_count()) throw InvalidArgument("run_al: budget exceeds the active pool");
  if (pool.dim() != labeled.dim()) throw InvalidArgument("run_al: pool and labeled inputs differ in dimension");

  RunTrace trace;
  trace.model = opts.model_id;
  trace.strategy = strategy.name();
  trace.steps.reserve(budget + 1);

  auto record = [&](const auto& model, std::size_t step, std::optional<std::size_t> chosen) {
    StepRecord r;
    r.step = step;
    r.n_labeled = static_cast<std::size_t>(labeled.size());
    r.chosen_index = chosen;
    if (chosen) r.chosen_x = pool.dim() == 1 ? pool.candidate(*chosen)(0) : static_cast<double>(*chosen);
    if (opts.record_decomposition) {
      const TestDecomposition d = test_decomposition(model, test, opts.mode);
      r.mc_bias = d.bias;
      r.mc_variance = d.variance;
      r.test_mse = d.bias + d.variance;
    } else {
      r.test_mse = test_mse(model, test, opts.mode);
    }
    if (!std::isfinite(r.test_mse)) throw NumericalError("run_al: non-finite test MSE");
    trace.steps.push_back(r);
  };

  auto model = factory.fit(labeled.inputs, labeled.outputs);
  record(model, 0, std::nullopt);

  std::vector<double> scores;
  for (std::size_t step = 1; step <= budget; ++step) {
    std::size_t chosen = 0;
    if (strategy.kind == StrategyKind::random) {
      chosen = score_random(rng, pool);
    } else {
      const auto active = pool.active_indices();
      scores.resize(active.size());
      std::optional<GpModel> surrogate;
      if (strategy.kind != StrategyKind::variance)
        surrogate.emplace(gp_fit(*strategy.surrogate_kernel, MeanFunction::zero(), labeled.inputs, labeled.outputs,
                                 opts.surrogate_noise_variance));
      for (std::size_t k = 0; k < active.size(); ++k) {
        const Eigen::VectorXd x = pool.candidate(active[k]).transpose();
        switch (strategy.kind) {
          case StrategyKind::variance:
            scores[k] = score_variance(model, x);
            break;
          case StrategyKind::direct_mse:
            scores[k] = score_direct_mse(*surrogate, model, x);
            break;
          case StrategyKind::upper_bound:
            scores[k] = score_upper_bound(*surrogate, model, x, labeled.inputs, *strategy.gradient_bound,
                                          strategy.delta, pool.size());
            break;
          case StrategyKind::random:
            break;
        }
      }
      chosen = select(pool, scores);
    }
    const double y = query_label(oracle, chosen, pool.candidate(chosen));
    labeled.append(pool.candidate(chosen), y);
    pool.deactivate(chosen);
    model = factory.fit(labeled.inputs, labeled.outputs);
    record(model, step, chosen);
  }
  trace.labeled = std::move(labeled);
  trace.terminal = true;
  return trace;
}

}  // namespace ual

#endif  // UAL_ALLOOP_HPP
