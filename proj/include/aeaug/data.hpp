#pragma once

// Dataset ingestion: CSV loading, one-hot encoding, min-max scaling to
// [-1, 1], normal-only train/val splits and a Gaussian test fixture.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aeaug/error.hpp"
#include "aeaug/matrix.hpp"
#include "aeaug/random.hpp"
#include "json.hpp"

namespace aeaug {

enum class ColumnKind { numeric, categorical, label };

inline ColumnKind parse_column_kind(std::string_view s) {
  if (s == "numeric" || s == "n") return ColumnKind::numeric;
  if (s == "categorical" || s == "c") return ColumnKind::categorical;
  if (s == "label" || s == "l") return ColumnKind::label;
  throw ParseError("unknown column kind '" + std::string(s) + "'");
}

inline std::string_view to_string(ColumnKind k) {
  switch (k) {
    case ColumnKind::numeric: return "numeric";
    case ColumnKind::categorical: return "categorical";
    case ColumnKind::label: return "label";
  }
  return "?";
}

struct RawDataset {
  std::string name;
  std::vector<std::string> header;  // empty when the file had none
  std::vector<ColumnKind> column_kinds;
  std::vector<std::vector<std::string>> rows;

  std::size_t columns() const noexcept { return column_kinds.size(); }
};

struct NumericDataset {
  Matrix matrix;
  std::optional<std::vector<int>> labels;  // 1 = anomaly
  std::vector<std::string> feature_names;
  // Raw label cell per row; lets callers keep one anomaly type at a time.
  std::vector<std::string> row_tags;

  std::size_t rows() const noexcept { return matrix.rows(); }
  std::size_t cols() const noexcept { return matrix.cols(); }
  bool has_labels() const noexcept { return labels.has_value(); }

  NumericDataset select(std::span<const std::size_t> indices) const {
    NumericDataset out;
    out.matrix = matrix.select_rows(indices);
    out.feature_names = feature_names;
    if (labels) {
      std::vector<int> l;
      l.reserve(indices.size());
      for (auto i : indices) l.push_back((*labels)[i]);
      out.labels = std::move(l);
    }
    if (!row_tags.empty()) {
      for (auto i : indices) out.row_tags.push_back(row_tags[i]);
    }
    return out;
  }
};

struct NormParams {
  std::vector<double> min;
  std::vector<double> max;

  friend bool operator==(const NormParams&, const NormParams&) = default;
};

struct SplitSpec {
  double train_fraction = 0.6;
  double val_fraction = 0.2;
  double test_fraction = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    if (train_fraction < 0 || val_fraction < 0 || test_fraction < 0) {
      throw ContractError("split fractions must be nonnegative");
    }
    if (std::abs(train_fraction + val_fraction + test_fraction - 1.0) > 1e-9) {
      throw ContractError("split fractions must sum to 1");
    }
  }
};

struct Split {
  NumericDataset train;
  NumericDataset val;
  NumericDataset test;
  std::vector<std::size_t> train_index;
  std::vector<std::size_t> val_index;
  std::vector<std::size_t> test_index;
};

struct CsvOptions {
  bool has_header = true;
  char delimiter = ',';
};

namespace detail {

inline std::vector<std::string> split_csv_line(std::string_view line, char delim) {
  std::vector<std::string> cells;
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
      cells.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quote");
  cells.push_back(std::move(cur));
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::optional<double> parse_real(std::string_view cell) {
  cell = trim(cell);
  if (cell.empty()) return std::nullopt;
  std::string tmp(cell);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (end != tmp.c_str() + tmp.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace detail

/// Reads a delimiter-separated file and validates every row against `kinds`.
inline RawDataset load_csv(const std::filesystem::path& path, std::vector<ColumnKind> kinds,
                           const CsvOptions& opts = {}) {
  if (std::count(kinds.begin(), kinds.end(), ColumnKind::label) > 1) {
    throw ContractError("at most one column may be tagged label");
  }
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");

  RawDataset ds;
  ds.name = path.stem().string();
  ds.column_kinds = std::move(kinds);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = opts.has_header;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells;
    try {
      cells = detail::split_csv_line(line, opts.delimiter);
    } catch (const ParseError& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (cells.size() != ds.column_kinds.size()) {
      const std::string what = header_pending ? "header" : "row " + std::to_string(ds.rows.size());
      throw ParseError(what + " (line " + std::to_string(line_no) + ") has " +
                       std::to_string(cells.size()) + " cells, expected " +
                       std::to_string(ds.column_kinds.size()));
    }
    for (auto& c : cells) c = std::string(detail::trim(c));
    if (header_pending) {
      ds.header = std::move(cells);
      header_pending = false;
    } else {
      ds.rows.push_back(std::move(cells));
    }
  }
  if (in.bad()) throw ParseError("read failure on '" + path.string() + "'");
  return ds;
}

/// Maps raw label cells to {0 = normal, 1 = anomaly}.
struct LabelRule {
  std::set<std::string> normal_values{"0", "normal", "normal."};

  int operator()(const std::string& cell) const { return normal_values.contains(cell) ? 0 : 1; }
};

/// Category vocabulary per categorical column, ordered lexicographically.
class OneHotEncoder {
 public:
  static OneHotEncoder fit(const RawDataset& raw) {
    OneHotEncoder enc;
    enc.kinds_ = raw.column_kinds;
    enc.header_ = raw.header;
    enc.categories_.resize(raw.columns());
    for (std::size_t c = 0; c < raw.columns(); ++c) {
      if (raw.column_kinds[c] != ColumnKind::categorical) continue;
      std::set<std::string> seen;
      for (const auto& r : raw.rows) seen.insert(r[c]);
      enc.categories_[c].assign(seen.begin(), seen.end());
    }
    return enc;
  }

  std::size_t output_width() const {
    std::size_t w = 0;
    for (std::size_t c = 0; c < kinds_.size(); ++c) {
      if (kinds_[c] == ColumnKind::numeric) ++w;
      if (kinds_[c] == ColumnKind::categorical) w += categories_[c].size();
    }
    return w;
  }

  const std::vector<std::string>& categories(std::size_t column) const {
    return categories_.at(column);
  }

  /// Categories absent from the fitted vocabulary encode as an all-zero block.
  NumericDataset transform(const RawDataset& raw, const LabelRule& rule = {}) const {
    if (raw.column_kinds != kinds_) throw ShapeError("one-hot: column kinds differ from fit");
    NumericDataset out;
    const std::size_t width = output_width();
    out.matrix = Matrix(raw.rows.size(), width);
    out.feature_names = feature_names();

    std::optional<std::size_t> label_col;
    for (std::size_t c = 0; c < kinds_.size(); ++c) {
      if (kinds_[c] == ColumnKind::label) label_col = c;
    }
    if (label_col) out.labels = std::vector<int>(raw.rows.size(), 0);

    for (std::size_t r = 0; r < raw.rows.size(); ++r) {
      const auto& cells = raw.rows[r];
      std::size_t j = 0;
      for (std::size_t c = 0; c < kinds_.size(); ++c) {
        switch (kinds_[c]) {
          case ColumnKind::numeric: {
            auto v = detail::parse_real(cells[c]);
            if (!v) {
              throw ParseError("row " + std::to_string(r) + ", column " + std::to_string(c) +
                               ": cannot parse '" + cells[c] + "' as a number");
            }
            out.matrix(r, j++) = *v;
            break;
          }
          case ColumnKind::categorical: {
            const auto& cats = categories_[c];
            auto it = std::lower_bound(cats.begin(), cats.end(), cells[c]);
            if (it != cats.end() && *it == cells[c]) {
              out.matrix(r, j + static_cast<std::size_t>(it - cats.begin())) = 1.0;
            }
            j += cats.size();
            break;
          }
          case ColumnKind::label:
            (*out.labels)[r] = rule(cells[c]);
            out.row_tags.push_back(cells[c]);
            break;
        }
      }
    }
    return out;
  }

 private:
  std::vector<std::string> feature_names() const {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < kinds_.size(); ++c) {
      const std::string base = c < header_.size() ? header_[c] : "c" + std::to_string(c);
      if (kinds_[c] == ColumnKind::numeric) names.push_back(base);
      if (kinds_[c] == ColumnKind::categorical) {
        for (const auto& cat : categories_[c]) names.push_back(base + "=" + cat);
      }
    }
    return names;
  }

  std::vector<ColumnKind> kinds_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> categories_;
};

inline NumericDataset one_hot_encode(const RawDataset& raw, const LabelRule& rule = {}) {
  return OneHotEncoder::fit(raw).transform(raw, rule);
}

inline NormParams fit_minmax(const NumericDataset& train) {
  if (train.rows() == 0) throw ContractError("fit_minmax: empty training set");
  NormParams p;
  p.min.assign(train.cols(), 0.0);
  p.max.assign(train.cols(), 0.0);
  for (std::size_t c = 0; c < train.cols(); ++c) {
    p.min[c] = p.max[c] = train.matrix(0, c);
  }
  for (std::size_t r = 1; r < train.rows(); ++r) {
    for (std::size_t c = 0; c < train.cols(); ++c) {
      p.min[c] = std::min(p.min[c], train.matrix(r, c));
      p.max[c] = std::max(p.max[c], train.matrix(r, c));
    }
  }
  return p;
}

/// x -> 2(x - min)/(max - min) - 1; constant columns map to 0. No clipping.
inline NumericDataset apply_minmax(NumericDataset ds, const NormParams& p) {
  if (ds.cols() != p.min.size() || p.min.size() != p.max.size()) {
    throw ShapeError("apply_minmax: dataset has " + std::to_string(ds.cols()) +
                     " columns, params have " + std::to_string(p.min.size()));
  }
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      const double range = p.max[c] - p.min[c];
      double& x = ds.matrix(r, c);
      x = range > 0.0 ? 2.0 * (x - p.min[c]) / range - 1.0 : 0.0;
    }
  }
  return ds;
}

inline void to_json(nlohmann::json& j, const NormParams& p) {
  j = nlohmann::json{{"min", p.min}, {"max", p.max}};
}

inline void from_json(const nlohmann::json& j, NormParams& p) {
  j.at("min").get_to(p.min);
  j.at("max").get_to(p.max);
  if (p.min.size() != p.max.size()) throw ParseError("norm params: min/max length differ");
  for (std::size_t i = 0; i < p.min.size(); ++i) {
    if (p.min[i] > p.max[i]) throw ParseError("norm params: min > max at column " + std::to_string(i));
  }
}

/// Seeded shuffle of the normal rows into train/val/test; every anomaly goes
/// to test after the held-out normals.
inline Split split(const NumericDataset& ds, const SplitSpec& spec) {
  spec.validate();
  if (!ds.has_labels()) throw ContractError("split: dataset has no labels");
  std::vector<std::size_t> normals, anomalies;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    ((*ds.labels)[i] == 0 ? normals : anomalies).push_back(i);
  }
  if (normals.empty()) throw ContractError("split: dataset has no normal rows");

  auto rng = make_rng(spec.seed, streams::split);
  std::shuffle(normals.begin(), normals.end(), rng);

  const auto n = static_cast<double>(normals.size());
  auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * n));
  auto n_val = static_cast<std::size_t>(std::llround(spec.val_fraction * n));
  n_train = std::min(n_train, normals.size());
  n_val = std::min(n_val, normals.size() - n_train);
  if (n_train == 0) throw ContractError("split: train fraction yields an empty train set");

  Split out;
  out.train_index.assign(normals.begin(), normals.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.val_index.assign(normals.begin() + static_cast<std::ptrdiff_t>(n_train),
                       normals.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
  out.test_index.assign(normals.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                        normals.end());
  out.test_index.insert(out.test_index.end(), anomalies.begin(), anomalies.end());
  out.train = ds.select(out.train_index);
  out.val = ds.select(out.val_index);
  out.test = ds.select(out.test_index);
  return out;
}

/// Seeded uniform subsample keeping round(fraction * rows) rows (at least one),
/// in original order.
inline NumericDataset subsample(const NumericDataset& ds, double fraction, std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ContractError("subsample fraction must be in (0,1]");
  if (fraction == 1.0 || ds.rows() == 0) return ds;
  std::vector<std::size_t> idx(ds.rows());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  auto rng = make_rng(seed, streams::subsample);
  std::shuffle(idx.begin(), idx.end(), rng);
  auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(ds.rows())));
  idx.resize(std::max<std::size_t>(keep, 1));
  std::sort(idx.begin(), idx.end());
  return ds.select(idx);
}

/// Keeps every normal row and only the anomalies whose raw label is in `types`.
inline NumericDataset filter_anomaly_types(const NumericDataset& ds,
                                           const std::vector<std::string>& types) {
  if (!ds.has_labels() || ds.row_tags.size() != ds.rows()) {
    throw ContractError("anomaly-type filtering needs per-row label tags");
  }
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < ds.rows(); ++i) {
    if ((*ds.labels)[i] == 0 ||
        std::find(types.begin(), types.end(), ds.row_tags[i]) != types.end()) {
      keep.push_back(i);
    }
  }
  return ds.select(keep);
}

/// Normals ~ N(0, I); anomalies ~ N(shift * 1, I). Normals come first.
inline NumericDataset synth_generate(std::size_t n_normal, std::size_t n_anomaly, std::size_t dim,
                                     double shift, std::uint64_t seed) {
  if (dim < 1) throw ContractError("synth_generate: dim must be >= 1");
  auto rng = make_rng(seed, streams::synth);
  std::normal_distribution<double> gauss(0.0, 1.0);
  NumericDataset ds;
  ds.matrix = Matrix(n_normal + n_anomaly, dim);
  std::vector<int> labels(n_normal + n_anomaly, 0);
  for (std::size_t r = 0; r < n_normal + n_anomaly; ++r) {
    const bool anomalous = r >= n_normal;
    labels[r] = anomalous ? 1 : 0;
    for (std::size_t c = 0; c < dim; ++c) ds.matrix(r, c) = gauss(rng) + (anomalous ? shift : 0.0);
    ds.row_tags.push_back(anomalous ? "anomaly" : "normal");
  }
  ds.labels = std::move(labels);
  for (std::size_t c = 0; c < dim; ++c) ds.feature_names.push_back("x" + std::to_string(c));
  return ds;
}

/// Writes the feature matrix with a header; the label, when present, is the
/// final column.
inline void write_csv(const NumericDataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write '" + path.string() + "'");
  out.precision(17);
  for (std::size_t c = 0; c < ds.cols(); ++c) {
    if (c) out << ',';
    out << (c < ds.feature_names.size() ? ds.feature_names[c] : "x" + std::to_string(c));
  }
  if (ds.has_labels()) out << (ds.cols() ? "," : "") << "label";
  out << '\n';
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    for (std::size_t c = 0; c < ds.cols(); ++c) {
      if (c) out << ',';
      out << ds.matrix(r, c);
    }
    if (ds.has_labels()) out << (ds.cols() ? "," : "") << (*ds.labels)[r];
    out << '\n';
  }
  if (!out) throw ParseError("write failure on '" + path.string() + "'");
}

/// Reads a file produced by write_csv back into a dataset.
inline NumericDataset read_numeric_csv(const std::filesystem::path& path, bool has_label = true) {
  std::ifstream probe(path);
  if (!probe) throw ParseError("cannot open '" + path.string() + "'");
  std::string first;
  std::getline(probe, first);
  const auto width = detail::split_csv_line(first, ',').size();
  std::vector<ColumnKind> kinds(width, ColumnKind::numeric);
  if (has_label && width > 0) kinds.back() = ColumnKind::label;
  auto raw = load_csv(path, kinds);
  LabelRule rule{{"0"}};
  auto ds = one_hot_encode(raw, rule);
  ds.row_tags.clear();
  return ds;
}

}  // namespace aeaug
