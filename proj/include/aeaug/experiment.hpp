#pragma once

// End-to-end experiment: load -> split -> scale -> train the autoencoder with
// latent harvesting -> build one training set per augmenter -> fit each
// detector -> score the test latents -> PR/ROC AUC, repeated with derived
// seeds and aggregated by trimmed mean.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "aeaug/augment.hpp"
#include "aeaug/autoencoder.hpp"
#include "aeaug/data.hpp"
#include "aeaug/error.hpp"
#include "aeaug/metrics.hpp"
#include "aeaug/occ.hpp"
#include "json.hpp"

namespace aeaug {

using nlohmann::json;

struct SyntheticSpec {
  std::size_t n_normal = 500;
  std::size_t n_anomaly = 50;
  std::size_t dim = 8;
  double shift = 3.0;
  std::uint64_t seed = 7;
};

struct DatasetConfig {
  std::string name = "dataset";
  std::optional<std::string> path;          // CSV source
  std::optional<SyntheticSpec> synthetic;   // used when no path is given
  std::vector<ColumnKind> columns;
  bool header = true;
  std::set<std::string> normal_labels{"0", "normal", "normal."};
  double subsample = 1.0;                   // fraction of the train split kept
  std::vector<std::string> anomaly_types;   // empty: every anomaly
};

struct ExperimentConfig {
  DatasetConfig dataset;
  SplitSpec split;
  TrainConfig train;
  WidthRounding bottleneck_rounding = WidthRounding::nearest;
  std::vector<AugmentMethod> augmenters{std::begin(kAllAugmenters), std::end(kAllAugmenters)};
  std::map<AugmentMethod, AugmentConfig> augment;  // resolved per method
  std::vector<DetectorKind> detectors{std::begin(kAllDetectors), std::end(kAllDetectors)};
  std::map<DetectorKind, OccConfig> occ;           // resolved per detector
  std::size_t repetitions = 10;
  std::size_t trim = 1;                            // dropped from each end; 0 = plain mean
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string output_dir;                          // empty: nothing written
  bool write_scores = true;

  ExperimentConfig() {
    for (auto m : kAllAugmenters) augment[m].method = m;
    for (auto d : kAllDetectors) occ[d].detector = d;
  }

  void validate() const {
    split.validate();
    train.validate();
    if (repetitions < 1) throw ContractError("repetitions must be >= 1");
    if (trim > 0 && repetitions <= 2 * trim) {
      throw ContractError("repetitions (" + std::to_string(repetitions) + ") too few to trim " +
                          std::to_string(trim) + " from each end");
    }
    if (augmenters.empty() || detectors.empty()) throw ContractError("no augmenters or detectors selected");
    for (auto d : detectors) occ.at(d).validate();
    if (!dataset.path && !dataset.synthetic) throw ContractError("dataset needs a path or a synthetic spec");
    if (!(dataset.subsample > 0.0 && dataset.subsample <= 1.0)) {
      throw ContractError("subsample fraction must lie in (0,1]");
    }
  }
};

// ---------------------------------------------------------------------------
// Config JSON

namespace detail {

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key) && !j.at(key).is_null()) j.at(key).get_to(out);
}

inline std::vector<ColumnKind> parse_columns(const json& j) {
  std::vector<ColumnKind> kinds;
  if (j.is_array()) {
    for (const auto& k : j) kinds.push_back(parse_column_kind(k.get<std::string>()));
    return kinds;
  }
  if (j.is_string()) {  // compact form, one letter per column: "nncl"
    for (char c : j.get<std::string>()) kinds.push_back(parse_column_kind(std::string(1, c)));
    return kinds;
  }
  const auto count = j.at("count").get<std::size_t>();
  kinds.assign(count, parse_column_kind(j.value("default", std::string("numeric"))));
  for (auto i : j.value("categorical", std::vector<std::size_t>{})) kinds.at(i) = ColumnKind::categorical;
  if (j.contains("label")) kinds.at(j.at("label").get<std::size_t>()) = ColumnKind::label;
  return kinds;
}

inline void apply_augment(const json& j, AugmentConfig& c) {
  read_opt(j, "k_neighbors", c.k_neighbors);
  read_opt(j, "noise_sigma", c.noise_sigma);
}

inline void apply_occ(const json& j, OccConfig& c) {
  read_opt(j, "lof_k", c.lof_k);
  read_opt(j, "contamination", c.contamination);
  read_opt(j, "isf_trees", c.isf_trees);
  read_opt(j, "isf_subsample", c.isf_subsample);
  if (j.contains("kde_bandwidth")) {
    const auto& b = j.at("kde_bandwidth");
    if (b.is_number()) {
      c.kde_bandwidth = b.get<double>();
    } else if (b.is_null() || b.get<std::string>() == "scott") {
      c.kde_bandwidth.reset();
    } else {
      throw ParseError("kde_bandwidth must be \"scott\" or a number");
    }
  }
}

inline std::string_view to_string(Optimizer o) { return o == Optimizer::sgd ? "sgd" : "rmsprop"; }

inline std::string_view to_string(WidthRounding r) {
  switch (r) {
    case WidthRounding::nearest: return "nearest";
    case WidthRounding::floor: return "floor";
    case WidthRounding::ceil: return "ceil";
  }
  return "?";
}

}  // namespace detail

inline ExperimentConfig parse_experiment_config(const json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("dataset")) {
      const auto& d = j.at("dataset");
      detail::read_opt(d, "name", cfg.dataset.name);
      if (d.contains("path")) cfg.dataset.path = d.at("path").get<std::string>();
      if (d.contains("synthetic")) {
        const auto& s = d.at("synthetic");
        SyntheticSpec spec;
        detail::read_opt(s, "n_normal", spec.n_normal);
        detail::read_opt(s, "n_anomaly", spec.n_anomaly);
        detail::read_opt(s, "dim", spec.dim);
        detail::read_opt(s, "shift", spec.shift);
        detail::read_opt(s, "seed", spec.seed);
        cfg.dataset.synthetic = spec;
      }
      if (d.contains("columns")) cfg.dataset.columns = detail::parse_columns(d.at("columns"));
      detail::read_opt(d, "header", cfg.dataset.header);
      detail::read_opt(d, "normal_labels", cfg.dataset.normal_labels);
      detail::read_opt(d, "subsample", cfg.dataset.subsample);
      detail::read_opt(d, "anomaly_types", cfg.dataset.anomaly_types);
    }
    if (j.contains("split")) {
      const auto& s = j.at("split");
      detail::read_opt(s, "train", cfg.split.train_fraction);
      detail::read_opt(s, "val", cfg.split.val_fraction);
      detail::read_opt(s, "test", cfg.split.test_fraction);
    }
    if (j.contains("train")) {
      const auto& t = j.at("train");
      auto& c = cfg.train;
      detail::read_opt(t, "n_epochs", c.n_epochs);
      detail::read_opt(t, "nu", c.nu);
      detail::read_opt(t, "batch_size", c.batch_size);
      if (t.contains("learning_rate") && !t.at("learning_rate").is_null()) {
        c.learning_rate = t.at("learning_rate").get<double>();
      }
      if (t.contains("optimizer")) {
        const auto o = t.at("optimizer").get<std::string>();
        if (o == "sgd") c.optimizer = Optimizer::sgd;
        else if (o == "rmsprop") c.optimizer = Optimizer::rmsprop;
        else throw ParseError("unknown optimizer '" + o + "'");
      }
      detail::read_opt(t, "rmsprop_decay", c.rmsprop_decay);
      detail::read_opt(t, "rmsprop_eps", c.rmsprop_eps);
      detail::read_opt(t, "early_stopping", c.early_stopping);
      detail::read_opt(t, "early_stop_patience", c.early_stop_patience);
      detail::read_opt(t, "early_stop_min_delta", c.early_stop_min_delta);
      if (t.contains("bottleneck_rounding")) {
        const auto r = t.at("bottleneck_rounding").get<std::string>();
        if (r == "nearest") cfg.bottleneck_rounding = WidthRounding::nearest;
        else if (r == "floor") cfg.bottleneck_rounding = WidthRounding::floor;
        else if (r == "ceil") cfg.bottleneck_rounding = WidthRounding::ceil;
        else throw ParseError("unknown bottleneck_rounding '" + r + "'");
      }
    }
    if (j.contains("augment")) {
      const auto& a = j.at("augment");
      for (auto& [m, c] : cfg.augment) detail::apply_augment(a, c);
      if (a.contains("methods")) {
        cfg.augmenters.clear();
        for (const auto& m : a.at("methods")) cfg.augmenters.push_back(parse_augment_method(m.get<std::string>()));
      }
      if (a.contains("overrides")) {
        for (const auto& [name, o] : a.at("overrides").items()) {
          detail::apply_augment(o, cfg.augment.at(parse_augment_method(name)));
        }
      }
    }
    if (j.contains("occ")) {
      const auto& o = j.at("occ");
      for (auto& [d, c] : cfg.occ) detail::apply_occ(o, c);
      if (o.contains("detectors")) {
        cfg.detectors.clear();
        for (const auto& d : o.at("detectors")) cfg.detectors.push_back(parse_detector(d.get<std::string>()));
      }
      if (o.contains("overrides")) {
        for (const auto& [name, ov] : o.at("overrides").items()) {
          detail::apply_occ(ov, cfg.occ.at(parse_detector(name)));
        }
      }
    }
    detail::read_opt(j, "repetitions", cfg.repetitions);
    detail::read_opt(j, "trim", cfg.trim);
    detail::read_opt(j, "seed", cfg.seed);
    detail::read_opt(j, "threads", cfg.threads);
    detail::read_opt(j, "output_dir", cfg.output_dir);
    detail::read_opt(j, "write_scores", cfg.write_scores);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  return cfg;
}

inline ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config '" + path.string() + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError("config '" + path.string() + "': " + e.what());
  }
  return parse_experiment_config(j);
}

/// Fully resolved config, defaults included. Run-control fields (threads,
/// output directory) are left out so they never change the report.
inline json config_to_json(const ExperimentConfig& c) {
  json d{{"name", c.dataset.name},
         {"header", c.dataset.header},
         {"normal_labels", c.dataset.normal_labels},
         {"subsample", c.dataset.subsample},
         {"anomaly_types", c.dataset.anomaly_types}};
  if (c.dataset.path) d["path"] = *c.dataset.path;
  if (c.dataset.synthetic) {
    const auto& s = *c.dataset.synthetic;
    d["synthetic"] = {{"n_normal", s.n_normal}, {"n_anomaly", s.n_anomaly}, {"dim", s.dim},
                      {"shift", s.shift}, {"seed", s.seed}};
  }
  auto cols = json::array();
  for (auto k : c.dataset.columns) cols.push_back(to_string(k));
  d["columns"] = cols;

  const auto& t = c.train;
  json train{{"n_epochs", t.n_epochs},
             {"nu", t.nu},
             {"batch_size", t.batch_size},
             {"learning_rate", t.resolved_learning_rate()},
             {"optimizer", detail::to_string(t.optimizer)},
             {"rmsprop_decay", t.rmsprop_decay},
             {"rmsprop_eps", t.rmsprop_eps},
             {"early_stopping", t.early_stopping},
             {"early_stop_patience", t.early_stop_patience},
             {"early_stop_min_delta", t.early_stop_min_delta},
             {"bottleneck_rounding", detail::to_string(c.bottleneck_rounding)}};

  json aug = json::object();
  for (auto m : c.augmenters) {
    const auto& a = c.augment.at(m);
    aug[std::string(to_string(m))] = {{"k_neighbors", a.k_neighbors}, {"noise_sigma", a.noise_sigma}};
  }
  json occ = json::object();
  for (auto dk : c.detectors) {
    const auto& o = c.occ.at(dk);
    occ[std::string(to_string(dk))] = {
        {"lof_k", o.lof_k},
        {"contamination", o.contamination},
        {"isf_trees", o.isf_trees},
        {"isf_subsample", o.isf_subsample},
        {"kde_bandwidth", o.kde_bandwidth ? json(*o.kde_bandwidth) : json("scott")}};
  }
  return {{"dataset", d},
          {"split", {{"train", c.split.train_fraction}, {"val", c.split.val_fraction}, {"test", c.split.test_fraction}}},
          {"train", train},
          {"augment", aug},
          {"occ", occ},
          {"repetitions", c.repetitions},
          {"trim", c.trim},
          {"seed", c.seed}};
}

// ---------------------------------------------------------------------------
// Data loading

/// Encoded dataset described by the config, with anomaly-type filtering applied.
inline NumericDataset load_dataset(const DatasetConfig& d) {
  NumericDataset ds;
  if (d.path) {
    if (d.columns.empty()) throw ContractError("dataset '" + *d.path + "': column kinds are required");
    auto raw = load_csv(*d.path, d.columns, CsvOptions{d.header, ','});
    ds = one_hot_encode(raw, LabelRule{d.normal_labels});
  } else {
    const auto& s = *d.synthetic;
    ds = synth_generate(s.n_normal, s.n_anomaly, s.dim, s.shift, s.seed);
  }
  if (!ds.has_labels()) throw ContractError("dataset has no label column");
  if (!d.anomaly_types.empty()) ds = filter_anomaly_types(ds, d.anomaly_types);
  return ds;
}

struct PreparedSplit {
  NumericDataset train, val, test;
  NormParams norm;
};

/// Split, optional train subsample, and min-max scaling fitted on train only.
inline PreparedSplit prepare_split(const NumericDataset& ds, const ExperimentConfig& cfg,
                                   std::uint64_t seed) {
  SplitSpec spec = cfg.split;
  spec.seed = seed;
  auto sp = split(ds, spec);
  auto train = subsample(sp.train, cfg.dataset.subsample, seed);
  PreparedSplit out;
  out.norm = fit_minmax(train);
  out.train = apply_minmax(std::move(train), out.norm);
  out.val = apply_minmax(std::move(sp.val), out.norm);
  out.test = apply_minmax(std::move(sp.test), out.norm);
  return out;
}

// ---------------------------------------------------------------------------
// Running

struct MetricRecord {
  std::string dataset;
  AugmentMethod augmenter = AugmentMethod::none;
  DetectorKind detector = DetectorKind::lof;
  std::size_t repetition = 0;
  double pr_auc = 0;
  double roc_auc = 0;
};

struct AggregateRecord {
  std::string dataset;
  AugmentMethod augmenter = AugmentMethod::none;
  DetectorKind detector = DetectorKind::lof;
  double pr_auc_trimmed = 0;
  double roc_auc_trimmed = 0;
};

struct BoxplotRecord {
  AugmentMethod augmenter = AugmentMethod::none;
  std::size_t repetition = 0;
  BoxplotStats stats;
};

/// Paired test of ae_epochs against one baseline across repetitions.
struct ComparisonRecord {
  AugmentMethod baseline = AugmentMethod::none;
  DetectorKind detector = DetectorKind::lof;
  std::string metric;
  std::optional<WilcoxonResult> result;
  std::string note;  // why the test was skipped
};

struct ScoreTable {
  AugmentMethod augmenter;
  DetectorKind detector;
  std::vector<double> scores;
  double threshold;
};

struct RepetitionResult {
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  std::vector<MetricRecord> records;
  std::vector<BoxplotRecord> boxplots;
  std::vector<EpochLoss> history;
  std::vector<int> test_labels;
  std::vector<ScoreTable> scores;
  TrainResult training;
  Matrix train_latents;
  Matrix test_latents;
};

inline RepetitionResult run_repetition(const NumericDataset& ds, const ExperimentConfig& cfg,
                                       std::size_t rep) {
  RepetitionResult out;
  out.repetition = rep;
  out.seed = cfg.seed + rep;
  const std::string where = "repetition " + std::to_string(rep);

  PreparedSplit data;
  try {
    data = prepare_split(ds, cfg, out.seed);
    TrainConfig tc = cfg.train;
    tc.seed = out.seed;
    auto model = build_ae(data.train.cols(), out.seed, cfg.bottleneck_rounding);
    out.training = train_with_harvest(std::move(model), data.train, data.val, tc);
  } catch (const Error& e) {
    throw Error(where + ": " + e.what());
  }
  out.history = out.training.history;
  out.train_latents = encode(out.training.model, data.train);
  out.test_latents = encode(out.training.model, data.test);
  out.test_labels = *data.test.labels;

  for (auto aug : cfg.augmenters) {
    Matrix train_set;
    try {
      AugmentConfig ac = cfg.augment.at(aug);
      ac.seed = out.seed;
      train_set = make_training_set(aug, out.train_latents, &out.training.latents, ac);
    } catch (const Error& e) {
      throw Error(where + ", augmenter " + std::string(to_string(aug)) + ": " + e.what());
    }
    for (auto det : cfg.detectors) {
      try {
        OccConfig oc = cfg.occ.at(det);
        oc.seed = out.seed;
        const auto detector = OccDetector::fit(train_set, oc);
        auto scores = detector.scores(out.test_latents);
        ScoredSet s{scores, out.test_labels};
        out.records.push_back({cfg.dataset.name, aug, det, rep, pr_auc(s), roc_auc(s)});
        if (det == DetectorKind::lof) out.boxplots.push_back({aug, rep, boxplot_stats(scores)});
        out.scores.push_back({aug, det, std::move(scores), detector.threshold()});
      } catch (const Error& e) {
        throw Error(where + ", augmenter " + std::string(to_string(aug)) + ", detector " +
                    std::string(to_string(det)) + ": " + e.what());
      }
    }
  }
  return out;
}

struct ExperimentReport {
  json config;
  std::vector<std::uint64_t> seeds;
  std::vector<MetricRecord> records;
  std::vector<AggregateRecord> aggregated;
  std::vector<BoxplotRecord> boxplots;
  std::vector<ComparisonRecord> comparisons;
};

inline ExperimentReport aggregate(const ExperimentConfig& cfg, const std::vector<RepetitionResult>& reps) {
  ExperimentReport report;
  report.config = config_to_json(cfg);
  for (const auto& r : reps) {
    report.seeds.push_back(r.seed);
    report.records.insert(report.records.end(), r.records.begin(), r.records.end());
    report.boxplots.insert(report.boxplots.end(), r.boxplots.begin(), r.boxplots.end());
  }
  auto series = [&](AugmentMethod a, DetectorKind d, bool pr) {
    std::vector<double> v;
    for (const auto& rec : report.records) {
      if (rec.augmenter == a && rec.detector == d) v.push_back(pr ? rec.pr_auc : rec.roc_auc);
    }
    return v;
  };
  for (auto a : cfg.augmenters) {
    for (auto d : cfg.detectors) {
      report.aggregated.push_back({cfg.dataset.name, a, d, trimmed_mean(series(a, d, true), cfg.trim),
                                   trimmed_mean(series(a, d, false), cfg.trim)});
    }
  }
  const bool has_proposed = std::find(cfg.augmenters.begin(), cfg.augmenters.end(),
                                      AugmentMethod::ae_epochs) != cfg.augmenters.end();
  if (has_proposed) {
    for (auto d : cfg.detectors) {
      for (auto a : cfg.augmenters) {
        if (a == AugmentMethod::ae_epochs) continue;
        for (bool pr : {true, false}) {
          ComparisonRecord c{a, d, pr ? "pr_auc" : "roc_auc", std::nullopt, ""};
          try {
            c.result = wilcoxon_signed_rank(series(AugmentMethod::ae_epochs, d, pr), series(a, d, pr));
          } catch (const ContractError& e) {
            c.note = e.what();
          }
          report.comparisons.push_back(std::move(c));
        }
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report JSON

inline json to_json_value(const ExperimentReport& r) {
  json records = json::array();
  for (const auto& m : r.records) {
    records.push_back({{"dataset", m.dataset},
                       {"augmenter", to_string(m.augmenter)},
                       {"detector", to_string(m.detector)},
                       {"repetition", m.repetition},
                       {"pr_auc", m.pr_auc},
                       {"roc_auc", m.roc_auc}});
  }
  json agg = json::array();
  for (const auto& a : r.aggregated) {
    agg.push_back({{"dataset", a.dataset},
                   {"augmenter", to_string(a.augmenter)},
                   {"detector", to_string(a.detector)},
                   {"pr_auc_trimmed", a.pr_auc_trimmed},
                   {"roc_auc_trimmed", a.roc_auc_trimmed}});
  }
  json boxes = json::array();
  for (const auto& b : r.boxplots) {
    boxes.push_back({{"augmenter", to_string(b.augmenter)}, {"repetition", b.repetition}, {"stats", b.stats}});
  }
  json comps = json::array();
  for (const auto& c : r.comparisons) {
    json jc{{"proposed", "ae_epochs"},
            {"baseline", to_string(c.baseline)},
            {"detector", to_string(c.detector)},
            {"metric", c.metric}};
    if (c.result) {
      jc["statistic"] = c.result->statistic;
      jc["p_value"] = c.result->p_value;
      jc["n"] = c.result->n;
      jc["exact"] = c.result->exact;
    } else {
      jc["skipped"] = c.note;
    }
    comps.push_back(std::move(jc));
  }
  return {{"config", r.config},
          {"seeds", r.seeds},
          {"records", records},
          {"aggregated", agg},
          {"boxplots", boxes},
          {"comparisons", comps}};
}

inline ExperimentReport report_from_json(const json& j) {
  ExperimentReport r;
  try {
    r.config = j.at("config");
    j.at("seeds").get_to(r.seeds);
    for (const auto& m : j.at("records")) {
      r.records.push_back({m.at("dataset").get<std::string>(),
                           parse_augment_method(m.at("augmenter").get<std::string>()),
                           parse_detector(m.at("detector").get<std::string>()),
                           m.at("repetition").get<std::size_t>(), m.at("pr_auc").get<double>(),
                           m.at("roc_auc").get<double>()});
    }
    for (const auto& a : j.at("aggregated")) {
      r.aggregated.push_back({a.at("dataset").get<std::string>(),
                              parse_augment_method(a.at("augmenter").get<std::string>()),
                              parse_detector(a.at("detector").get<std::string>()),
                              a.at("pr_auc_trimmed").get<double>(), a.at("roc_auc_trimmed").get<double>()});
    }
    for (const auto& b : j.value("boxplots", json::array())) {
      r.boxplots.push_back({parse_augment_method(b.at("augmenter").get<std::string>()),
                            b.at("repetition").get<std::size_t>(), b.at("stats").get<BoxplotStats>()});
    }
    for (const auto& c : j.value("comparisons", json::array())) {
      ComparisonRecord cr{parse_augment_method(c.at("baseline").get<std::string>()),
                          parse_detector(c.at("detector").get<std::string>()),
                          c.at("metric").get<std::string>(), std::nullopt, c.value("skipped", "")};
      if (c.contains("p_value")) {
        WilcoxonResult w;
        w.statistic = c.at("statistic").get<double>();
        w.p_value = c.at("p_value").get<double>();
        w.n = c.at("n").get<std::size_t>();
        w.exact = c.at("exact").get<bool>();
        cr.result = w;
      }
      r.comparisons.push_back(std::move(cr));
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed report: ") + e.what());
  }
  return r;
}

inline std::string dump_report(const ExperimentReport& r) { return to_json_value(r).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Output files

inline void write_outputs(const ExperimentConfig& cfg, const ExperimentReport& report,
                          const std::vector<RepetitionResult>& reps) {
  namespace fs = std::filesystem;
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  auto open = [](const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ParseError("cannot write '" + p.string() + "'");
    return f;
  };
  open(dir / "report.json") << dump_report(report);

  json boxes = to_json_value(report).at("boxplots");
  open(dir / "boxplot.json") << boxes.dump(2) << '\n';

  {
    auto f = open(dir / "loss_history.csv");
    f.precision(17);
    f << "repetition,epoch,train_loss,val_loss\n";
    for (const auto& r : reps) {
      for (const auto& e : r.history) {
        f << r.repetition << ',' << e.epoch << ',' << e.train_loss << ',' << e.val_loss << '\n';
      }
    }
  }
  if (!cfg.write_scores) return;
  fs::create_directories(dir / "scores");
  for (const auto& r : reps) {
    for (const auto& t : r.scores) {
      auto f = open(dir / "scores" /
                    ("rep" + std::to_string(r.repetition) + "_" + std::string(to_string(t.augmenter)) +
                     "_" + std::string(to_string(t.detector)) + ".csv"));
      f.precision(17);
      f << "row,score,predicted,label\n";
      for (std::size_t i = 0; i < t.scores.size(); ++i) {
        f << i << ',' << t.scores[i] << ',' << (t.scores[i] > t.threshold ? 1 : 0) << ','
          << r.test_labels[i] << '\n';
      }
    }
  }
}

/// Runs every repetition (optionally on worker threads), merges the results
/// in repetition order and writes the output files when an output directory
/// is configured.
inline ExperimentReport run_experiment(const ExperimentConfig& cfg,
                                       std::vector<RepetitionResult>* details = nullptr) {
  cfg.validate();
  const NumericDataset ds = load_dataset(cfg.dataset);

  std::vector<RepetitionResult> reps(cfg.repetitions);
  std::vector<std::exception_ptr> errors(cfg.repetitions);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t r; (r = next.fetch_add(1)) < cfg.repetitions;) {
      try {
        reps[r] = run_repetition(ds, cfg, r);
      } catch (...) {
        errors[r] = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::clamp<std::size_t>(cfg.threads, 1, cfg.repetitions);
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  auto report = aggregate(cfg, reps);
  if (!cfg.output_dir.empty()) write_outputs(cfg, report, reps);
  if (details) *details = std::move(reps);
  return report;
}

// ---------------------------------------------------------------------------
// Table rendering

/// Aggregated grid, one row per (augmenter, detector); the best value in
/// each metric column is marked with '*' (every tied maximum is marked).
inline std::string render_report(const ExperimentReport& r, int precision = 3) {
  double best_pr = -1, best_roc = -1;
  for (const auto& a : r.aggregated) {
    best_pr = std::max(best_pr, a.pr_auc_trimmed);
    best_roc = std::max(best_roc, a.roc_auc_trimmed);
  }
  auto cell = [&](double v, double best) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f%s", precision, v, v == best ? "*" : " ");
    return std::string(buf);
  };
  std::ostringstream out;
  const int w = precision + 4;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %-9s %*s %*s\n", "augmenter", "detector", w, "PR", w, "ROC");
  out << line;
  for (const auto& a : r.aggregated) {
    std::snprintf(line, sizeof line, "%-12s %-9s %*s %*s\n", std::string(to_string(a.augmenter)).c_str(),
                  std::string(to_string(a.detector)).c_str(), w, cell(a.pr_auc_trimmed, best_pr).c_str(),
                  w, cell(a.roc_auc_trimmed, best_roc).c_str());
    out << line;
  }
  return out.str();
}

}  // namespace aeaug
