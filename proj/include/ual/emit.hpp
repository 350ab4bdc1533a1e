#ifndef UAL_EMIT_HPP
#define UAL_EMIT_HPP

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ual/config.hpp"
#include "ual/error.hpp"
#include "ual/experiment.hpp"
#include "ual/svg.hpp"

namespace ual {

inline constexpr const char* artifact_version = "0.1.0";

inline constexpr const char* traces_header =
    "experiment_id,seed,model,strategy,step,n_labeled,chosen_x,test_mse,mc_bias,mc_variance";
inline constexpr const char* summary_header = "experiment_id,model,strategy,step,mean_mse,std_mse,n_seeds";
inline constexpr const char* discrepancy_header = "experiment_id,model,strategy,step,x,mean_discrepancy,n_seeds";

/// 17 significant digits; NaN and missing values become an empty field.
inline std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string csv_number(const std::optional<double>& v) { return v ? csv_number(*v) : std::string(); }

inline std::string traces_csv(const AggregateResults& res) {
  const std::string& id = res.config.experiment_id;
  std::string out = std::string(traces_header) + "\n";
  for (const auto& run : res.runs) {
    for (const auto& r : run.trace.steps) {
      out += id;
      out += ',' + std::to_string(run.seed) + ',' + run.trace.model + ',' + run.trace.strategy + ',' +
             std::to_string(r.step) + ',' + std::to_string(r.n_labeled) + ',' + csv_number(r.chosen_x) + ',' +
             csv_number(r.test_mse) + ',' + csv_number(r.mc_bias) + ',' + csv_number(r.mc_variance) + '\n';
    }
  }
  return out;
}

inline std::string summary_csv(const AggregateResults& res) {
  const std::string& id = res.config.experiment_id;
  std::string out = std::string(summary_header) + "\n";
  for (const auto& r : res.summary)
    out += id + ',' + r.model + ',' + r.strategy + ',' + std::to_string(r.step) + ',' + csv_number(r.mean_mse) + ',' +
           csv_number(r.std_mse) + ',' + std::to_string(r.n_seeds) + '\n';
  return out;
}

inline std::string discrepancy_csv(const AggregateResults& res) {
  const std::string& id = res.config.experiment_id;
  std::string out = std::string(discrepancy_header) + "\n";
  for (const auto& r : res.discrepancy)
    out += id + ',' + r.model + ',' + r.strategy + ',' + std::to_string(r.step) + ',' + csv_number(r.x) + ',' +
           csv_number(r.mean_discrepancy) + ',' + std::to_string(r.n_seeds) + '\n';
  return out;
}

inline nlohmann::json meta_json(const AggregateResults& res) {
  nlohmann::json j;
  j["artifact_version"] = artifact_version;
  j["config"] = config_to_json(res.config);
  j["wall_time_seconds"] = res.wall_time_seconds;
  j["n_runs"] = res.runs.size();
  return j;
}

/// Mean test MSE vs step for every strategy of one model, with a +-1 std band.
inline std::string curves_svg(const AggregateResults& res, const std::string& model) {
  std::vector<Series> series;
  for (const auto& sc : res.config.strategies) {
    Series s;
    s.label = sc.spec.name();
    for (const auto& r : res.summary) {
      if (r.model != model || r.strategy != s.label) continue;
      s.x.push_back(static_cast<double>(r.step));
      s.y.push_back(r.mean_mse);
      s.spread.push_back(r.std_mse);
    }
    series.push_back(std::move(s));
  }
  ChartOptions opt;
  opt.title = res.config.experiment_id + ": " + model + " (" + std::to_string(res.config.n_seeds) + " seeds)";
  opt.x_label = "acquisition step";
  opt.y_label = "test MSE (mean +- 1 std)";
  return line_chart_svg(series, opt);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << content;
  out.close();
  if (!out) throw InputError("write failed for '" + path.string() + "'");
}

}  // namespace detail

/// Write traces.csv, summary.csv, meta.json, curves_<model>.svg and, when
/// present, discrepancy.csv. Returns the files written.
inline std::vector<std::filesystem::path> emit(const AggregateResults& res, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw InputError("cannot create output directory '" + dir.string() + "': " + ec.message());
  std::vector<std::filesystem::path> written;
  auto put = [&](const std::string& name, const std::string& content) {
    detail::write_file(dir / name, content);
    written.push_back(dir / name);
  };
  put("traces.csv", traces_csv(res));
  put("summary.csv", summary_csv(res));
  put("meta.json", meta_json(res).dump(2) + "\n");
  for (const auto& m : res.config.models) put("curves_" + m.id + ".svg", curves_svg(res, m.id));
  if (!res.discrepancy.empty()) put("discrepancy.csv", discrepancy_csv(res));
  return written;
}

}  // namespace ual

#endif  // UAL_EMIT_HPP
