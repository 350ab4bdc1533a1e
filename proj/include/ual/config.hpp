#ifndef UAL_CONFIG_HPP
#define UAL_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "ual/acquisition.hpp"
#include "ual/alloop.hpp"
#include "ual/error.hpp"
#include "ual/gpr.hpp"
#include "ual/synthetic.hpp"

namespace ual {

/// Invalid config; `field` is the JSON path of the offending entry.
class ConfigError : public InputError {
 public:
  ConfigError(std::string field, const std::string& message)
      : InputError(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct SyntheticTargetConfig {
  TargetKind kind = TargetKind::pure_polynomial;
  int order = 3;
  double noise_variance = 1.0;
  double cosine_amplitude = 1.0;
  double cosine_frequency = 1.0;
};

struct DatasetTargetConfig {
  std::string schema;  // built-in id or schema file path
  std::string path;
  double test_fraction = 0.25;
  std::optional<std::size_t> subsample;
};

enum class ModelType { bpr, gpr };

struct ModelConfig {
  std::string id;
  ModelType type = ModelType::bpr;
  int degree = 1;               // bpr
  double prior_variance = 1.0;  // bpr
  KernelSpec kernel;            // gpr
  double mean_value = 0.0;      // gpr constant mean (0 = zero mean)
  std::optional<double> noise_variance;
  std::vector<double> lengthscale_grid;  // gpr, optional marginal-likelihood search
};

struct StrategyConfig {
  StrategySpec spec;
  bool auto_gradient_bound = false;
  std::optional<double> surrogate_noise_variance;
};

struct PoolConfig {
  std::size_t n = 200;
  double lo = -2.0;
  double hi = 2.0;
};

struct TestConfig {
  std::size_t n = 500;
  double lo = -2.0;
  double hi = 2.0;
  TestLayout layout = TestLayout::uniform_random;
  std::optional<MseMode> mode;
};

struct DiscrepancyConfig {
  std::size_t grid_n = 50;
  std::vector<std::size_t> steps;
};

struct ExperimentConfig {
  std::string experiment_id;
  std::string description;
  std::variant<SyntheticTargetConfig, DatasetTargetConfig> target;
  std::vector<ModelConfig> models;
  std::vector<StrategyConfig> strategies;
  std::size_t n_seeds = 1;
  std::size_t budget = 0;
  PoolConfig pool;
  TestConfig test;
  std::string output_dir;
  std::uint64_t master_seed = 0;
  std::size_t parallelism = 1;
  bool record_decomposition = false;
  std::optional<DiscrepancyConfig> discrepancy;

  bool synthetic() const { return std::holds_alternative<SyntheticTargetConfig>(target); }
  MseMode mse_mode() const { return test.mode.value_or(synthetic() ? MseMode::vs_clean : MseMode::vs_observed); }
};

namespace detail {

using nlohmann::json;

/// Strict reader over one JSON object: every key must be consumed.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_.empty() ? "<root>" : path_, "expected an object");
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

  void touch(const std::string& key) { seen_.insert(key); }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    if (!j_.contains(key)) throw ConfigError(at(key), "required field missing");
    return j_.at(key);
  }

  template <class T>
  T get(const std::string& key) {
    const json& v = raw(key);
    return convert<T>(v, at(key));
  }

  template <class T>
  T get_or(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!has(key)) return fallback;
    return convert<T>(j_.at(key), at(key));
  }

  template <class T>
  std::optional<T> get_opt(const std::string& key) {
    seen_.insert(key);
    if (!has(key)) return std::nullopt;
    return convert<T>(j_.at(key), at(key));
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(at(k), "unknown key '" + k + "'");
  }

  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError(where, "expected a number");
    } else if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where, "expected true or false");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where, "expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where, "expected an integer");
      if constexpr (std::is_unsigned_v<T>)
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0)
          throw ConfigError(where, "expected a non-negative integer");
    }
    try {
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where, e.what());
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline KernelSpec parse_kernel(const json& j, const std::string& path) {
  ObjectReader r(j, path);
  const auto kind = r.get<std::string>("kind");
  KernelSpec k;
  if (kind == "linear") {
    k = KernelSpec::linear(r.get_or<double>("bias", 1.0), r.get_or<double>("weight", 1.0));
  } else if (kind == "rbf" || kind == "matern52") {
    const double a = r.get_or<double>("amplitude", 1.0);
    const double l = r.get_or<double>("lengthscale", 1.0);
    k = kind == "rbf" ? KernelSpec::rbf(a, l) : KernelSpec::matern52(a, l);
  } else {
    throw ConfigError(r.at("kind"), "unknown kernel '" + kind + "' (linear, rbf, matern52)");
  }
  r.finish();
  try {
    k.validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(path, e.what());
  }
  return k;
}

inline json kernel_to_json(const KernelSpec& k) {
  if (k.kind == KernelKind::linear) return {{"kind", "linear"}, {"bias", k.bias}, {"weight", k.weight}};
  return {{"kind", to_string(k.kind)}, {"amplitude", k.amplitude}, {"lengthscale", k.lengthscale}};
}

inline std::string position_of(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using detail::ObjectReader;
  ObjectReader root(j, "");
  ExperimentConfig cfg;
  cfg.experiment_id = root.get<std::string>("experiment_id");
  static const std::regex id_re("[a-z0-9_-]+");
  if (!std::regex_match(cfg.experiment_id, id_re)) throw ConfigError("experiment_id", "must match [a-z0-9_-]+");
  cfg.description = root.get_or<std::string>("description", "");

  {
    ObjectReader t(root.raw("target"), "target");
    const auto type = t.get<std::string>("type");
    if (type == "synthetic") {
      SyntheticTargetConfig s;
      const auto kind = t.get<std::string>("kind");
      if (kind == "pure_polynomial") {
        s.kind = TargetKind::pure_polynomial;
      } else if (kind == "polynomial_plus_cosine") {
        s.kind = TargetKind::polynomial_plus_cosine;
      } else {
        throw ConfigError("target.kind", "unknown target kind '" + kind + "'");
      }
      s.order = t.get<int>("order");
      if (s.order < 0) throw ConfigError("target.order", "must be >= 0");
      s.noise_variance = t.get_or<double>("noise_variance", 1.0);
      if (!(s.noise_variance > 0.0)) throw ConfigError("target.noise_variance", "must be > 0");
      s.cosine_amplitude = t.get_or<double>("cosine_amplitude", 1.0);
      s.cosine_frequency = t.get_or<double>("cosine_frequency", 1.0);
      cfg.target = s;
    } else if (type == "dataset") {
      DatasetTargetConfig d;
      d.schema = t.get<std::string>("schema");
      d.path = t.get<std::string>("path");
      d.test_fraction = t.get_or<double>("test_fraction", 0.25);
      if (!(d.test_fraction > 0.0 && d.test_fraction < 1.0)) throw ConfigError("target.test_fraction", "must be in (0, 1)");
      d.subsample = t.get_opt<std::size_t>("subsample");
      cfg.target = d;
    } else {
      throw ConfigError("target.type", "must be 'synthetic' or 'dataset'");
    }
    t.finish();
  }

  const auto& models = root.raw("models");
  if (!models.is_array() || models.empty()) throw ConfigError("models", "expected a nonempty array");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string path = "models[" + std::to_string(i) + "]";
    ObjectReader m(models[i], path);
    ModelConfig mc;
    const auto type = m.get<std::string>("type");
    if (type == "bpr") {
      mc.type = ModelType::bpr;
      mc.degree = m.get<int>("degree");
      if (mc.degree < 0) throw ConfigError(m.at("degree"), "must be >= 0");
      mc.prior_variance = m.get_or<double>("prior_variance", 1.0);
      if (!(mc.prior_variance > 0.0)) throw ConfigError(m.at("prior_variance"), "must be > 0");
      mc.id = m.get_or<std::string>("id", "bpr_p" + std::to_string(mc.degree));
    } else if (type == "gpr") {
      mc.type = ModelType::gpr;
      mc.kernel = detail::parse_kernel(m.raw("kernel"), m.at("kernel"));
      mc.mean_value = m.get_or<double>("mean", 0.0);
      mc.lengthscale_grid = m.get_or<std::vector<double>>("lengthscale_grid", {});
      for (double l : mc.lengthscale_grid)
        if (!(l > 0.0)) throw ConfigError(m.at("lengthscale_grid"), "entries must be > 0");
      mc.id = m.get_or<std::string>("id", std::string("gpr_") + to_string(mc.kernel.kind));
    } else {
      throw ConfigError(m.at("type"), "must be 'bpr' or 'gpr'");
    }
    mc.noise_variance = m.get_opt<double>("noise_variance");
    if (mc.noise_variance && !(*mc.noise_variance > 0.0)) throw ConfigError(m.at("noise_variance"), "must be > 0");
    if (!cfg.synthetic() && !mc.noise_variance)
      throw ConfigError(m.at("noise_variance"), "required for dataset targets");
    if (!cfg.synthetic() && mc.type == ModelType::bpr)
      throw ConfigError(m.at("type"), "bpr needs one-dimensional inputs; dataset targets support gpr only");
    static const std::regex model_re("[A-Za-z0-9_.-]+");
    if (!std::regex_match(mc.id, model_re)) throw ConfigError(m.at("id"), "must match [A-Za-z0-9_.-]+");
    if (!ids.insert(mc.id).second) throw ConfigError(m.at("id"), "duplicate model id '" + mc.id + "'");
    m.finish();
    cfg.models.push_back(mc);
  }

  const auto& strategies = root.raw("strategies");
  if (!strategies.is_array() || strategies.empty()) throw ConfigError("strategies", "expected a nonempty array");
  std::set<std::string> kinds;
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const std::string path = "strategies[" + std::to_string(i) + "]";
    ObjectReader s(strategies[i], path);
    StrategyConfig sc;
    const auto kind = s.get<std::string>("kind");
    if (kind == "variance") {
      sc.spec = StrategySpec::variance();
    } else if (kind == "random") {
      sc.spec = StrategySpec::random();
    } else if (kind == "direct_mse" || kind == "upper_bound") {
      const KernelSpec k = s.has("surrogate_kernel")
                               ? detail::parse_kernel(s.raw("surrogate_kernel"), s.at("surrogate_kernel"))
                               : (s.touch("surrogate_kernel"), KernelSpec::rbf(1.0, 0.5));
      sc.spec = kind == "direct_mse" ? StrategySpec::direct_mse(k) : StrategySpec::upper_bound(0.0, 0.05, k);
      sc.surrogate_noise_variance = s.get_opt<double>("surrogate_noise_variance");
      if (sc.surrogate_noise_variance && !(*sc.surrogate_noise_variance > 0.0))
        throw ConfigError(s.at("surrogate_noise_variance"), "must be > 0");
      if (!cfg.synthetic() && !sc.surrogate_noise_variance)
        throw ConfigError(s.at("surrogate_noise_variance"), "required for dataset targets");
      if (kind == "upper_bound") {
        const auto& gb = s.raw("gradient_bound");
        if (gb.is_string() && gb.get<std::string>() == "auto") {
          if (!cfg.synthetic()) throw ConfigError(s.at("gradient_bound"), "'auto' needs a synthetic target");
          sc.auto_gradient_bound = true;
        } else {
          sc.spec.gradient_bound = detail::ObjectReader::convert<double>(gb, s.at("gradient_bound"));
          if (!(*sc.spec.gradient_bound >= 0.0)) throw ConfigError(s.at("gradient_bound"), "must be >= 0");
        }
        sc.spec.delta = s.get_or<double>("delta", 0.05);
        if (!(sc.spec.delta > 0.0 && sc.spec.delta < 1.0)) throw ConfigError(s.at("delta"), "must be in (0, 1)");
      }
    } else {
      throw ConfigError(s.at("kind"), "unknown strategy '" + kind + "'");
    }
    if (!kinds.insert(kind).second) throw ConfigError(s.at("kind"), "duplicate strategy '" + kind + "'");
    s.finish();
    cfg.strategies.push_back(sc);
  }

  cfg.n_seeds = root.get<std::size_t>("n_seeds");
  if (cfg.n_seeds < 1) throw ConfigError("n_seeds", "must be >= 1");
  cfg.budget = root.get<std::size_t>("budget");

  if (root.has("pool")) {
    ObjectReader p(root.raw("pool"), "pool");
    cfg.pool.n = p.get_or<std::size_t>("n", 200);
    cfg.pool.lo = p.get_or<double>("lo", -2.0);
    cfg.pool.hi = p.get_or<double>("hi", 2.0);
    p.finish();
  } else {
    root.get_opt<int>("pool");
  }
  if (cfg.synthetic()) {
    if (cfg.pool.n < 2) throw ConfigError("pool.n", "must be >= 2");
    if (!(cfg.pool.lo < cfg.pool.hi)) throw ConfigError("pool.lo", "must be < pool.hi");
    if (cfg.budget > cfg.pool.n - 1)
      throw ConfigError("budget", "budget " + std::to_string(cfg.budget) + " exceeds the " +
                                      std::to_string(cfg.pool.n - 1) + " unlabeled pool candidates");
  }

  if (root.has("test")) {
    ObjectReader t(root.raw("test"), "test");
    cfg.test.n = t.get_or<std::size_t>("n", 500);
    cfg.test.lo = t.get_or<double>("lo", -2.0);
    cfg.test.hi = t.get_or<double>("hi", 2.0);
    const auto layout = t.get_or<std::string>("layout", "uniform_random");
    if (layout == "uniform_random") {
      cfg.test.layout = TestLayout::uniform_random;
    } else if (layout == "even_grid") {
      cfg.test.layout = TestLayout::even_grid;
    } else {
      throw ConfigError("test.layout", "must be 'uniform_random' or 'even_grid'");
    }
    if (auto mode = t.get_opt<std::string>("mode")) {
      if (*mode == "vs_clean") {
        if (!cfg.synthetic()) throw ConfigError("test.mode", "vs_clean needs a synthetic target");
        cfg.test.mode = MseMode::vs_clean;
      } else if (*mode == "vs_observed") {
        cfg.test.mode = MseMode::vs_observed;
      } else {
        throw ConfigError("test.mode", "must be 'vs_clean' or 'vs_observed'");
      }
    }
    t.finish();
  } else {
    root.get_opt<int>("test");
  }
  if (cfg.synthetic()) {
    if (cfg.test.n < 1) throw ConfigError("test.n", "must be >= 1");
    if (!(cfg.test.lo < cfg.test.hi)) throw ConfigError("test.lo", "must be < test.hi");
  }

  cfg.output_dir = root.get_or<std::string>("output_dir", "");
  cfg.master_seed = root.get_or<std::uint64_t>("master_seed", 0);
  cfg.parallelism = root.get_or<std::size_t>("parallelism", 1);
  if (cfg.parallelism < 1) throw ConfigError("parallelism", "must be >= 1");
  cfg.record_decomposition = root.get_or<bool>("record_decomposition", false);

  if (root.has("discrepancy")) {
    ObjectReader d(root.raw("discrepancy"), "discrepancy");
    DiscrepancyConfig dc;
    dc.grid_n = d.get_or<std::size_t>("grid_n", 50);
    if (dc.grid_n < 2) throw ConfigError("discrepancy.grid_n", "must be >= 2");
    dc.steps = d.get<std::vector<std::size_t>>("steps");
    for (auto s : dc.steps)
      if (s > cfg.budget) throw ConfigError("discrepancy.steps", "step " + std::to_string(s) + " exceeds the budget");
    d.finish();
    const auto* syn = std::get_if<SyntheticTargetConfig>(&cfg.target);
    if (!syn || syn->kind != TargetKind::pure_polynomial)
      throw ConfigError("discrepancy", "needs a pure polynomial synthetic target");
    cfg.discrepancy = dc;
  } else {
    root.get_opt<int>("discrepancy");
  }
  root.finish();
  return cfg;
}

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  using nlohmann::json;
  json j;
  j["experiment_id"] = cfg.experiment_id;
  j["description"] = cfg.description;
  if (const auto* s = std::get_if<SyntheticTargetConfig>(&cfg.target)) {
    j["target"] = {{"type", "synthetic"},
                   {"kind", s->kind == TargetKind::pure_polynomial ? "pure_polynomial" : "polynomial_plus_cosine"},
                   {"order", s->order},
                   {"noise_variance", s->noise_variance},
                   {"cosine_amplitude", s->cosine_amplitude},
                   {"cosine_frequency", s->cosine_frequency}};
  } else {
    const auto& d = std::get<DatasetTargetConfig>(cfg.target);
    j["target"] = {{"type", "dataset"}, {"schema", d.schema}, {"path", d.path}, {"test_fraction", d.test_fraction}};
    j["target"]["subsample"] = d.subsample ? json(*d.subsample) : json(nullptr);
  }
  j["models"] = json::array();
  for (const auto& m : cfg.models) {
    json mj;
    mj["id"] = m.id;
    if (m.type == ModelType::bpr) {
      mj["type"] = "bpr";
      mj["degree"] = m.degree;
      mj["prior_variance"] = m.prior_variance;
    } else {
      mj["type"] = "gpr";
      mj["kernel"] = detail::kernel_to_json(m.kernel);
      mj["mean"] = m.mean_value;
      if (!m.lengthscale_grid.empty()) mj["lengthscale_grid"] = m.lengthscale_grid;
    }
    if (m.noise_variance) mj["noise_variance"] = *m.noise_variance;
    j["models"].push_back(mj);
  }
  j["strategies"] = json::array();
  for (const auto& s : cfg.strategies) {
    json sj;
    sj["kind"] = s.spec.name();
    if (s.spec.surrogate_kernel) sj["surrogate_kernel"] = detail::kernel_to_json(*s.spec.surrogate_kernel);
    if (s.surrogate_noise_variance) sj["surrogate_noise_variance"] = *s.surrogate_noise_variance;
    if (s.spec.kind == StrategyKind::upper_bound) {
      sj["gradient_bound"] = s.auto_gradient_bound ? json("auto") : json(*s.spec.gradient_bound);
      sj["delta"] = s.spec.delta;
    }
    j["strategies"].push_back(sj);
  }
  j["n_seeds"] = cfg.n_seeds;
  j["budget"] = cfg.budget;
  j["pool"] = {{"n", cfg.pool.n}, {"lo", cfg.pool.lo}, {"hi", cfg.pool.hi}};
  j["test"] = {{"n", cfg.test.n},
               {"lo", cfg.test.lo},
               {"hi", cfg.test.hi},
               {"layout", cfg.test.layout == TestLayout::uniform_random ? "uniform_random" : "even_grid"}};
  if (cfg.test.mode) j["test"]["mode"] = *cfg.test.mode == MseMode::vs_clean ? "vs_clean" : "vs_observed";
  j["output_dir"] = cfg.output_dir;
  j["master_seed"] = cfg.master_seed;
  j["parallelism"] = cfg.parallelism;
  j["record_decomposition"] = cfg.record_decomposition;
  if (cfg.discrepancy) j["discrepancy"] = {{"grid_n", cfg.discrepancy->grid_n}, {"steps", cfg.discrepancy->steps}};
  return j;
}

/// Parse a config from JSON text; syntax errors report line and column.
inline ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError(origin + ": JSON parse error at " + detail::position_of(text, e.byte) + ": " + e.what());
  }
  return config_from_json(j);
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  ExperimentConfig cfg = parse_config_text(ss.str(), path.string());
  // Relative dataset paths are relative to the config file.
  if (auto* d = std::get_if<DatasetTargetConfig>(&cfg.target)) {
    const auto base = path.parent_path();
    if (std::filesystem::path(d->path).is_relative()) d->path = (base / d->path).lexically_normal().string();
    if (d->schema != "concrete" && d->schema != "facebook" && std::filesystem::path(d->schema).is_relative())
      d->schema = (base / d->schema).lexically_normal().string();
  }
  return cfg;
}

}  // namespace ual

#endif  // UAL_CONFIG_HPP
