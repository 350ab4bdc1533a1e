#ifndef UAL_EXPERIMENT_HPP
#define UAL_EXPERIMENT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <tuple>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "ual/alloop.hpp"
#include "ual/analysis.hpp"
#include "ual/bpr.hpp"
#include "ual/config.hpp"
#include "ual/datasets.hpp"
#include "ual/error.hpp"
#include "ual/gpr.hpp"
#include "ual/rng.hpp"
#include "ual/synthetic.hpp"

namespace ual {

// Stream ids under (master_seed, seed).
namespace stream {
inline constexpr std::uint64_t target = 1;
inline constexpr std::uint64_t test = 2;
inline constexpr std::uint64_t initial = 3;
inline constexpr std::uint64_t label_noise = 4;
inline constexpr std::uint64_t random_strategy = 5;
inline constexpr std::uint64_t split = 6;
}  // namespace stream

/// A run failure tagged with where it happened.
class RunError : public std::runtime_error {
 public:
  RunError(std::size_t seed, std::string model, std::string strategy, const std::string& what)
      : std::runtime_error("seed " + std::to_string(seed) + ", model " + model + ", strategy " + strategy + ": " +
                           what),
        seed_(seed),
        model_(std::move(model)),
        strategy_(std::move(strategy)) {}

  std::size_t seed() const { return seed_; }
  const std::string& model() const { return model_; }
  const std::string& strategy() const { return strategy_; }

 private:
  std::size_t seed_;
  std::string model_;
  std::string strategy_;
};

struct SeededTrace {
  std::size_t seed = 0;
  RunTrace trace;
};

struct SummaryRow {
  std::string model;
  std::string strategy;
  std::size_t step = 0;
  double mean_mse = 0.0;
  double std_mse = 0.0;  // sample std (n - 1); 0 for a single seed
  std::size_t n_seeds = 0;
};

/// Seed-averaged |closed form - 2 (sigma_p^2 - sigma^2)| at one grid point.
struct DiscrepancyRow {
  std::string model;
  std::string strategy;
  std::size_t step = 0;
  double x = 0.0;
  double mean_discrepancy = 0.0;
  std::size_t n_seeds = 0;
};

struct AggregateResults {
  ExperimentConfig config;
  std::vector<SeededTrace> runs;  // (seed, model, strategy) order
  std::vector<SummaryRow> summary;
  std::vector<DiscrepancyRow> discrepancy;
  double wall_time_seconds = 0.0;

  const SummaryRow* find(const std::string& model, const std::string& strategy, std::size_t step) const {
    for (const auto& r : summary)
      if (r.model == model && r.strategy == strategy && r.step == step) return &r;
    return nullptr;
  }

  /// Per-seed test MSE of one (model, strategy) at `step`, in seed order.
  std::vector<double> per_seed(const std::string& model, const std::string& strategy, std::size_t step) const {
    std::vector<double> out;
    for (const auto& r : runs)
      if (r.trace.model == model && r.trace.strategy == strategy && step < r.trace.steps.size())
        out.push_back(r.trace.steps[step].test_mse);
    return out;
  }
};

namespace detail {

/// Everything one seed needs that does not depend on the model or strategy.
struct SeedSetup {
  std::optional<GroundTruthTarget> target;
  LabelOracle oracle;
  UnlabeledPool pool;
  TestSet test;
  LabeledSet initial;
  double noise_variance = 1.0;  // target noise, used as the model default
};

inline SeedSetup synthetic_setup(const ExperimentConfig& cfg, const SyntheticTargetConfig& sc, std::size_t seed) {
  const std::uint64_t m = cfg.master_seed;
  const auto s = static_cast<std::uint64_t>(seed);
  SeedSetup out;
  Rng trng = Rng::derive(m, {s, stream::target});
  GroundTruthTarget target =
      sample_target(sc.order, trng, sc.kind, sc.noise_variance, sc.cosine_amplitude, sc.cosine_frequency);
  Rng test_rng = Rng::derive(m, {s, stream::test});
  out.test = build_test_set(cfg.test.n, cfg.test.lo, cfg.test.hi, target, test_rng, cfg.test.layout);
  out.pool = build_pool(cfg.pool.n, cfg.pool.lo, cfg.pool.hi);
  out.oracle = SyntheticOracle{target, derive_seed(m, {s, stream::label_noise})};
  out.noise_variance = sc.noise_variance;
  out.target = std::move(target);
  return out;
}

inline SeedSetup dataset_setup(const ExperimentConfig& cfg, const DatasetTargetConfig& dc, const TabularDataset& data,
                               std::size_t seed) {
  Rng rng = Rng::derive(cfg.master_seed, {static_cast<std::uint64_t>(seed), stream::split});
  auto [train, test] = split(data, dc.test_fraction, dc.subsample, rng);
  const Standardizer st = fit_standardizer(train);
  train = apply_standardizer(st, train);
  test = apply_standardizer(st, test);
  if (cfg.budget + 1 > static_cast<std::size_t>(train.size()))
    throw InvalidArgument("budget " + std::to_string(cfg.budget) + " exceeds the " +
                          std::to_string(std::max<Eigen::Index>(train.size(), 1) - 1) + " unlabeled training rows");
  SeedSetup out;
  out.pool = UnlabeledPool(train.features);
  out.oracle = TableOracle{train.targets};
  out.test.inputs = test.features;
  out.test.observed = test.targets;
  return out;
}

inline void draw_initial(const ExperimentConfig& cfg, std::size_t seed, SeedSetup& setup) {
  Rng rng = Rng::derive(cfg.master_seed, {static_cast<std::uint64_t>(seed), stream::initial});
  const auto i = static_cast<std::size_t>(rng.index(setup.pool.size()));
  setup.initial.append(setup.pool.candidate(i), query_label(setup.oracle, i, setup.pool.candidate(i)));
  setup.pool.deactivate(i);
}

inline StrategySpec resolve_strategy(const StrategyConfig& sc, const SeedSetup& setup, const ExperimentConfig& cfg) {
  StrategySpec spec = sc.spec;
  if (sc.auto_gradient_bound) spec.gradient_bound = std::ceil(gradient_bound(*setup.target, cfg.pool.lo, cfg.pool.hi));
  return spec;
}

/// Labels of the whole pool, for the optional one-off lengthscale search.
inline Eigen::VectorXd pool_labels(const SeedSetup& setup) {
  Eigen::VectorXd y(static_cast<Eigen::Index>(setup.pool.size()));
  for (std::size_t i = 0; i < setup.pool.size(); ++i)
    y(static_cast<Eigen::Index>(i)) = query_label(setup.oracle, i, setup.pool.candidate(i));
  return y;
}

inline RunTrace run_one(const ExperimentConfig& cfg, const ModelConfig& mc, const StrategySpec& spec,
                        const StrategyConfig& sc, const SeedSetup& setup, std::size_t seed) {
  RunOptions opts;
  opts.mode = cfg.mse_mode();
  opts.record_decomposition = cfg.record_decomposition;
  opts.surrogate_noise_variance = sc.surrogate_noise_variance.value_or(setup.noise_variance);
  opts.model_id = mc.id;
  // Same stream for every model, so random runs of one seed pick the same points.
  Rng rng = Rng::derive(cfg.master_seed, {static_cast<std::uint64_t>(seed), stream::random_strategy});
  const double noise = mc.noise_variance.value_or(setup.noise_variance);
  if (mc.type == ModelType::bpr) {
    const BprRegressor f{BprPrior::isotropic(mc.degree, mc.prior_variance, noise)};
    return run_al(f, spec, setup.oracle, setup.initial, setup.pool, setup.test, cfg.budget, rng, opts);
  }
  GpRegressor f{mc.kernel, MeanFunction::constant(mc.mean_value), noise};
  if (!mc.lengthscale_grid.empty())
    f.kernel = select_lengthscale(f.kernel, f.mean, setup.pool.candidates(), pool_labels(setup), noise,
                                  mc.lengthscale_grid);
  return run_al(f, spec, setup.oracle, setup.initial, setup.pool, setup.test, cfg.budget, rng, opts);
}

struct SeedOutput {
  std::vector<RunTrace> traces;            // (model, strategy) order
  std::vector<std::vector<double>> discrepancy;  // per (bpr model, strategy, step): grid values
};

inline std::vector<double> discrepancy_grid(const DiscrepancyConfig& dc, const PoolConfig& pool) {
  std::vector<double> g(dc.grid_n);
  for (std::size_t i = 0; i < dc.grid_n; ++i)
    g[i] = pool.lo + (pool.hi - pool.lo) * static_cast<double>(i) / static_cast<double>(dc.grid_n - 1);
  return g;
}

inline SeedOutput run_seed(const ExperimentConfig& cfg, const TabularDataset* data, std::size_t seed) {
  SeedSetup setup;
  try {
    if (const auto* sc = std::get_if<SyntheticTargetConfig>(&cfg.target)) {
      setup = synthetic_setup(cfg, *sc, seed);
    } else {
      setup = dataset_setup(cfg, std::get<DatasetTargetConfig>(cfg.target), *data, seed);
    }
    draw_initial(cfg, seed, setup);
  } catch (const std::exception& e) {
    throw RunError(seed, "-", "-", e.what());
  }

  SeedOutput out;
  for (const auto& mc : cfg.models) {
    for (const auto& sc : cfg.strategies) {
      try {
        const StrategySpec spec = resolve_strategy(sc, setup, cfg);
        out.traces.push_back(run_one(cfg, mc, spec, sc, setup, seed));
      } catch (const std::exception& e) {
        throw RunError(seed, mc.id, sc.spec.name(), e.what());
      }
    }
  }

  if (cfg.discrepancy) {
    const auto& sc = std::get<SyntheticTargetConfig>(cfg.target);
    const TargetFamily family = TargetFamily::isotropic(sc.order, sc.noise_variance);
    const auto grid = discrepancy_grid(*cfg.discrepancy, cfg.pool);
    std::size_t k = 0;
    for (const auto& mc : cfg.models) {
      for (std::size_t j = 0; j < cfg.strategies.size(); ++j, ++k) {
        if (mc.type != ModelType::bpr) continue;
        const BprPrior prior =
            BprPrior::isotropic(mc.degree, mc.prior_variance, mc.noise_variance.value_or(sc.noise_variance));
        const RunTrace& tr = out.traces[k];
        for (std::size_t step : cfg.discrepancy->steps) {
          const Eigen::VectorXd inputs = tr.labeled.inputs.col(0).head(static_cast<Eigen::Index>(step + 1));
          std::vector<double> vals(grid.size());
          try {
            for (std::size_t g = 0; g < grid.size(); ++g) vals[g] = variance_identity_gap(grid[g], family, prior, inputs);
          } catch (const std::exception& e) {
            throw RunError(seed, mc.id, cfg.strategies[j].spec.name(), e.what());
          }
          out.discrepancy.push_back(std::move(vals));
        }
      }
    }
  }
  return out;
}

}  // namespace detail

/// Run every (seed, model, strategy) of `cfg`. Seeds are spread over
/// `parallelism` threads; results are folded in seed order, so the output
/// does not depend on the thread count.
inline AggregateResults run_experiment(const ExperimentConfig& cfg, std::size_t parallelism = 0) {
  const auto t0 = std::chrono::steady_clock::now();
  if (parallelism == 0) parallelism = cfg.parallelism;
  parallelism = std::max<std::size_t>(1, std::min(parallelism, cfg.n_seeds));

  std::optional<TabularDataset> data;
  if (const auto* dc = std::get_if<DatasetTargetConfig>(&cfg.target))
    data = load_csv(dc->path, resolve_schema(dc->schema));

  std::vector<std::optional<detail::SeedOutput>> outputs(cfg.n_seeds);
  std::vector<std::exception_ptr> errors(cfg.n_seeds);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (std::size_t s; !failed.load() && (s = next.fetch_add(1)) < cfg.n_seeds;) {
      try {
        outputs[s] = detail::run_seed(cfg, data ? &*data : nullptr, s);
      } catch (...) {
        errors[s] = std::current_exception();
        failed = true;
      }
    }
  };
  if (parallelism == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < parallelism; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  AggregateResults res;
  res.config = cfg;
  const std::size_t steps = cfg.budget + 1;
  for (std::size_t s = 0; s < cfg.n_seeds; ++s)
    for (auto& tr : outputs[s]->traces) res.runs.push_back({s, std::move(tr)});

  const std::size_t groups = cfg.models.size() * cfg.strategies.size();
  const double n = static_cast<double>(cfg.n_seeds);
  for (std::size_t g = 0; g < groups; ++g) {
    const auto& mc = cfg.models[g / cfg.strategies.size()];
    const auto& sc = cfg.strategies[g % cfg.strategies.size()];
    for (std::size_t step = 0; step < steps; ++step) {
      double sum = 0.0;
      for (std::size_t s = 0; s < cfg.n_seeds; ++s) sum += res.runs[s * groups + g].trace.steps[step].test_mse;
      const double mean = sum / n;
      double ss = 0.0;
      for (std::size_t s = 0; s < cfg.n_seeds; ++s) {
        const double d = res.runs[s * groups + g].trace.steps[step].test_mse - mean;
        ss += d * d;
      }
      res.summary.push_back({mc.id, sc.spec.name(), step, mean, cfg.n_seeds > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0,
                             cfg.n_seeds});
    }
  }

  if (cfg.discrepancy) {
    const auto grid = detail::discrepancy_grid(*cfg.discrepancy, cfg.pool);
    std::size_t k = 0;
    for (const auto& mc : cfg.models) {
      if (mc.type != ModelType::bpr) continue;
      for (const auto& sc : cfg.strategies) {
        for (std::size_t step : cfg.discrepancy->steps) {
          for (std::size_t gi = 0; gi < grid.size(); ++gi) {
            double sum = 0.0;
            for (std::size_t s = 0; s < cfg.n_seeds; ++s) sum += outputs[s]->discrepancy[k][gi];
            res.discrepancy.push_back({mc.id, sc.spec.name(), step, grid[gi], sum / n, cfg.n_seeds});
          }
          ++k;
        }
      }
    }
  }
  res.wall_time_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace ual

#endif  // UAL_EXPERIMENT_HPP
