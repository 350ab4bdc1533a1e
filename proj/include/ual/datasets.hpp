#ifndef UAL_DATASETS_HPP
#define UAL_DATASETS_HPP

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string_view>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "json.hpp"
#include "ual/error.hpp"
#include "ual/rng.hpp"

namespace ual {

/// Column roles of a delimited file. Categorical columns must also be listed
/// in `features`; they are one-hot encoded in place.
struct DatasetSchema {
  std::string name;
  char delimiter = ',';
  std::string target;
  std::vector<std::string> features;
  std::vector<std::string> categorical;
};

inline DatasetSchema concrete_schema() {
  DatasetSchema s;
  s.name = "concrete";
  s.delimiter = ',';
  s.features = {"Cement (component 1)(kg in a m^3 mixture)",
                "Blast Furnace Slag (component 2)(kg in a m^3 mixture)",
                "Fly Ash (component 3)(kg in a m^3 mixture)",
                "Water (component 4)(kg in a m^3 mixture)",
                "Superplasticizer (component 5)(kg in a m^3 mixture)",
                "Coarse Aggregate (component 6)(kg in a m^3 mixture)",
                "Fine Aggregate (component 7)(kg in a m^3 mixture)",
                "Age (day)"};
  s.target = "Concrete compressive strength(MPa, megapascals)";
  return s;
}

inline DatasetSchema facebook_schema() {
  DatasetSchema s;
  s.name = "facebook";
  s.delimiter = ';';
  s.features = {"Page total likes", "Type", "Category", "Post Month", "Post Weekday", "Post Hour", "Paid"};
  s.categorical = {"Type"};
  s.target = "Total Interactions";
  return s;
}

inline DatasetSchema schema_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {"name", "delimiter", "target", "features", "categorical"};
  if (!j.is_object()) throw InputError("schema: expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!known.count(k)) throw InputError("schema: unknown key '" + k + "'");
  DatasetSchema s;
  try {
    s.name = j.value("name", std::string{});
    const std::string delim = j.value("delimiter", std::string{","});
    if (delim != "," && delim != ";") throw InputError("schema: delimiter must be ',' or ';'");
    s.delimiter = delim[0];
    s.target = j.at("target").get<std::string>();
    s.features = j.at("features").get<std::vector<std::string>>();
    s.categorical = j.value("categorical", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("schema: ") + e.what());
  }
  if (s.features.empty()) throw InputError("schema: no feature columns");
  for (const auto& c : s.categorical)
    if (std::find(s.features.begin(), s.features.end(), c) == s.features.end())
      throw InputError("schema: categorical column '" + c + "' is not a feature");
  return s;
}

/// Built-in schema id ("concrete", "facebook") or a path to a schema JSON file.
inline DatasetSchema resolve_schema(const std::string& id_or_path) {
  if (id_or_path == "concrete") return concrete_schema();
  if (id_or_path == "facebook") return facebook_schema();
  std::ifstream in(id_or_path);
  if (!in) throw InputError("schema: cannot open '" + id_or_path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("schema '" + id_or_path + "': " + e.what());
  }
  return schema_from_json(j);
}

struct TabularDataset {
  Eigen::MatrixXd features;  // n x d
  Eigen::VectorXd targets;
  std::vector<std::string> feature_names;
  std::string target_name;
  std::size_t dropped_rows = 0;

  Eigen::Index size() const { return targets.size(); }
  Eigen::Index dim() const { return features.cols(); }
};

namespace detail {

inline std::string normalize_name(std::string_view s) {
  std::string out;
  bool space = false;
  for (char ch : s) {
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') {
      space = !out.empty();
      continue;
    }
    if (space) out.push_back(' ');
    space = false;
    out.push_back(ch);
  }
  if (out.size() >= 3 && static_cast<unsigned char>(out[0]) == 0xEF && static_cast<unsigned char>(out[1]) == 0xBB &&
      static_cast<unsigned char>(out[2]) == 0xBF)
    out.erase(0, 3);
  return out;
}

inline std::vector<std::string> split_fields(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == delim) {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

inline std::optional<double> parse_number(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Load a delimited file with a header row. Rows with a missing or
/// unparseable value in any declared column are dropped and counted.
inline TabularDataset load_csv(const std::filesystem::path& path, const DatasetSchema& schema) {
  std::ifstream in(path);
  if (!in) throw InputError("load_csv: cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw InputError("load_csv: '" + path.string() + "' has no header row");

  const auto header = detail::split_fields(line, schema.delimiter);
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(detail::normalize_name(header[i]), i);
  auto find = [&](const std::string& name) {
    auto it = column.find(detail::normalize_name(name));
    if (it == column.end()) throw InputError("load_csv: header of '" + path.string() + "' lacks column '" + name + "'");
    return it->second;
  };
  const std::size_t target_col = find(schema.target);
  std::vector<std::size_t> feature_cols;
  std::vector<bool> is_cat;
  for (const auto& f : schema.features) {
    feature_cols.push_back(find(f));
    is_cat.push_back(std::find(schema.categorical.begin(), schema.categorical.end(), f) != schema.categorical.end());
  }

  struct Row {
    std::vector<double> numeric;
    std::vector<std::string> labels;
    double target;
  };
  std::vector<Row> rows;
  std::vector<std::set<std::string>> levels(schema.features.size());
  std::size_t dropped = 0;
  while (std::getline(in, line)) {
    if (detail::normalize_name(line).empty()) continue;
    const auto fields = detail::split_fields(line, schema.delimiter);
    auto field = [&](std::size_t c) -> std::optional<std::string> {
      if (c >= fields.size()) return std::nullopt;
      std::string v = detail::normalize_name(fields[c]);
      if (v.empty()) return std::nullopt;
      return v;
    };
    Row r;
    bool ok = true;
    const auto t = field(target_col);
    const auto tv = t ? detail::parse_number(*t) : std::nullopt;
    if (!tv) ok = false;
    for (std::size_t k = 0; ok && k < feature_cols.size(); ++k) {
      const auto v = field(feature_cols[k]);
      if (!v) {
        ok = false;
      } else if (is_cat[k]) {
        r.labels.push_back(*v);
        r.numeric.push_back(0.0);
      } else if (auto num = detail::parse_number(*v)) {
        r.labels.emplace_back();
        r.numeric.push_back(*num);
      } else {
        ok = false;
      }
    }
    if (!ok) {
      ++dropped;
      continue;
    }
    r.target = *tv;
    for (std::size_t k = 0; k < feature_cols.size(); ++k)
      if (is_cat[k]) levels[k].insert(r.labels[k]);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw InputError("load_csv: every row of '" + path.string() + "' was dropped");

  TabularDataset ds;
  ds.target_name = schema.target;
  ds.dropped_rows = dropped;
  for (std::size_t k = 0; k < feature_cols.size(); ++k) {
    if (is_cat[k])
      for (const auto& lv : levels[k]) ds.feature_names.push_back(schema.features[k] + "=" + lv);
    else
      ds.feature_names.push_back(schema.features[k]);
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  ds.features.resize(n, static_cast<Eigen::Index>(ds.feature_names.size()));
  ds.targets.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Row& r = rows[static_cast<std::size_t>(i)];
    Eigen::Index c = 0;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      if (is_cat[k]) {
        for (const auto& lv : levels[k]) ds.features(i, c++) = r.labels[k] == lv ? 1.0 : 0.0;
      } else {
        ds.features(i, c++) = r.numeric[k];
      }
    }
    ds.targets(i) = r.target;
  }
  return ds;
}

inline TabularDataset take_rows(const TabularDataset& ds, const std::vector<std::size_t>& idx) {
  TabularDataset out;
  out.feature_names = ds.feature_names;
  out.target_name = ds.target_name;
  out.features.resize(static_cast<Eigen::Index>(idx.size()), ds.dim());
  out.targets.resize(static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.features.row(static_cast<Eigen::Index>(i)) = ds.features.row(static_cast<Eigen::Index>(idx[i]));
    out.targets(static_cast<Eigen::Index>(i)) = ds.targets(static_cast<Eigen::Index>(idx[i]));
  }
  return out;
}

/// Optional uniform subsample without replacement, then a random split with
/// round(n * test_fraction) test rows.
inline std::pair<TabularDataset, TabularDataset> split(const TabularDataset& ds, double test_fraction,
                                                       std::optional<std::size_t> subsample, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw InvalidArgument("split: test_fraction must be in (0, 1)");
  const auto total = static_cast<std::size_t>(ds.size());
  if (subsample && *subsample > total) throw InvalidArgument("split: subsample larger than dataset");
  std::vector<std::size_t> idx(total);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Fisher-Yates; a full shuffle covers both the subsample and the split.
  for (std::size_t i = total; i > 1; --i) std::swap(idx[i - 1], idx[rng.index(i)]);
  const std::size_t n = subsample.value_or(total);
  idx.resize(n);
  const auto n_test = static_cast<std::size_t>(std::llround(static_cast<double>(n) * test_fraction));
  std::vector<std::size_t> test_idx(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_test));
  std::vector<std::size_t> train_idx(idx.begin() + static_cast<std::ptrdiff_t>(n_test), idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  return {take_rows(ds, train_idx), take_rows(ds, test_idx)};
}

/// Per-column z-scoring fitted on the training partition only. Columns with
/// zero variance are dropped and listed in `dropped_columns`.
struct Standardizer {
  std::vector<Eigen::Index> kept_columns;
  std::vector<std::string> dropped_columns;
  Eigen::VectorXd feature_means;
  Eigen::VectorXd feature_stds;
  double target_mean = 0.0;
  double target_std = 1.0;

  double transform_target(double y) const { return (y - target_mean) / target_std; }
  double inverse_target(double z) const { return z * target_std + target_mean; }
};

inline Standardizer fit_standardizer(const TabularDataset& train) {
  if (train.size() == 0) throw InvalidArgument("fit_standardizer: empty training set");
  const double n = static_cast<double>(train.size());
  auto stats = [n](const Eigen::VectorXd& v) {
    const double m = v.mean();
    const double var = (v.array() - m).square().sum() / n;
    return std::pair{m, std::sqrt(var)};
  };
  Standardizer st;
  std::vector<double> means, stds;
  for (Eigen::Index c = 0; c < train.dim(); ++c) {
    const auto [m, s] = stats(train.features.col(c));
    if (!(s > 1e-12 * std::max(1.0, std::abs(m)))) {
      st.dropped_columns.push_back(train.feature_names.at(static_cast<std::size_t>(c)));
      continue;
    }
    st.kept_columns.push_back(c);
    means.push_back(m);
    stds.push_back(s);
  }
  st.feature_means = Eigen::Map<Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  st.feature_stds = Eigen::Map<Eigen::VectorXd>(stds.data(), static_cast<Eigen::Index>(stds.size()));
  const auto [tm, ts] = stats(train.targets);
  if (!(ts > 0.0)) throw InvalidArgument("fit_standardizer: target has zero variance");
  st.target_mean = tm;
  st.target_std = ts;
  return st;
}

inline TabularDataset apply_standardizer(const Standardizer& st, const TabularDataset& ds) {
  TabularDataset out;
  out.target_name = ds.target_name;
  out.dropped_rows = ds.dropped_rows;
  const auto d = static_cast<Eigen::Index>(st.kept_columns.size());
  out.features.resize(ds.size(), d);
  for (Eigen::Index k = 0; k < d; ++k) {
    const Eigen::Index c = st.kept_columns[static_cast<std::size_t>(k)];
    out.features.col(k) = (ds.features.col(c).array() - st.feature_means(k)) / st.feature_stds(k);
    out.feature_names.push_back(ds.feature_names.at(static_cast<std::size_t>(c)));
  }
  out.targets = (ds.targets.array() - st.target_mean) / st.target_std;
  return out;
}

}  // namespace ual

#endif  // UAL_DATASETS_HPP
