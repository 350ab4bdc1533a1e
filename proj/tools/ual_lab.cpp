// ual_lab: run, validate and list active-learning experiment configs.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ual.hpp"

#ifndef UAL_CONFIG_DIR
#define UAL_CONFIG_DIR "configs"
#endif

namespace fs = std::filesystem;

namespace {

fs::path output_dir(const ual::ExperimentConfig& cfg, const std::string& cli_out) {
  if (!cli_out.empty()) return cli_out;
  if (const char* env = std::getenv("UAL_LAB_OUT"); env && *env) return fs::path(env) / cfg.experiment_id;
  if (!cfg.output_dir.empty()) return cfg.output_dir;
  return fs::path("out") / cfg.experiment_id;
}

int cmd_run(const std::string& config, const std::string& out, std::optional<std::size_t> parallel,
            std::optional<std::uint64_t> seed) {
  ual::ExperimentConfig cfg = ual::parse_config(config);
  if (seed) cfg.master_seed = *seed;
  if (parallel) cfg.parallelism = *parallel;
  const fs::path dir = output_dir(cfg, out);
  std::cerr << "running " << cfg.experiment_id << ": " << cfg.n_seeds << " seeds x " << cfg.models.size()
            << " models x " << cfg.strategies.size() << " strategies, budget " << cfg.budget << ", "
            << cfg.parallelism << " worker(s)\n";
  const ual::AggregateResults res = ual::run_experiment(cfg, cfg.parallelism);
  for (const auto& p : ual::emit(res, dir)) std::cout << p.string() << "\n";
  std::cerr << "done in " << res.wall_time_seconds << " s\n";
  return 0;
}

int cmd_validate(const std::string& config) {
  const ual::ExperimentConfig cfg = ual::parse_config(config);
  std::cout << "ok: " << cfg.experiment_id << " (" << cfg.n_seeds << " seeds, budget " << cfg.budget << ", "
            << cfg.models.size() << " models, " << cfg.strategies.size() << " strategies)\n";
  return 0;
}

int cmd_list(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    std::cerr << "error: config directory '" << dir.string() << "' not found\n";
    return 1;
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      const auto cfg = ual::parse_config(f);
      std::cout << cfg.experiment_id << "\t" << f.string() << "\t" << cfg.description << "\n";
    } catch (const std::exception& e) {
      std::cout << f.stem().string() << "\t" << f.string() << "\tINVALID: " << e.what() << "\n";
    }
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Uncertainty-based active learning laboratory"};
  app.require_subcommand(1);

  std::string config, out, config_dir = UAL_CONFIG_DIR;
  std::optional<std::size_t> parallel;
  std::optional<std::uint64_t> seed;

  auto* run = app.add_subcommand("run", "run an experiment config and write its outputs");
  run->add_option("--config", config, "experiment config (JSON)")->required();
  run->add_option("--out", out, "output directory (default: $UAL_LAB_OUT/<id>, then the config's output_dir)");
  run->add_option("--parallel", parallel, "worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "override master_seed");

  auto* validate = app.add_subcommand("validate", "check a config without running it");
  validate->add_option("--config", config, "experiment config (JSON)")->required();

  auto* list = app.add_subcommand("list-experiments", "list shipped experiment configs");
  list->add_option("--config-dir", config_dir, "directory to scan");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out, parallel, seed);
    if (*validate) return cmd_validate(config);
    if (*list) return cmd_list(config_dir);
  } catch (const ual::RunError& e) {
    std::cerr << "run failed: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
