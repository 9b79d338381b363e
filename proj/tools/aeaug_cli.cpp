// aeaug: experiment runner for autoencoder latent-epoch augmentation of
// one-class anomaly detectors.
//
//   aeaug prepare --config exp.json --out prepared/
//   aeaug run     --config exp.json --out results/ [--seed N] [--repetitions N]
//                 [--methods none,ae_epochs] [--detectors lof,kde] [--threads N]
//   aeaug report  results/report.json

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "aeaug/aeaug.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

aeaug::ExperimentConfig config_from_flags(const std::string& config_path, const std::string& data,
                                          const std::string& columns, bool no_header) {
  aeaug::ExperimentConfig cfg;
  if (!config_path.empty()) cfg = aeaug::load_experiment_config(config_path);
  if (!data.empty()) {
    cfg.dataset.path = data;
    cfg.dataset.name = std::filesystem::path(data).stem().string();
  }
  if (!columns.empty()) {
    cfg.dataset.columns = aeaug::detail::parse_columns(nlohmann::json(columns));
  }
  if (no_header) cfg.dataset.header = false;
  return cfg;
}

int cmd_prepare(const aeaug::ExperimentConfig& cfg, const std::string& out_dir, std::uint64_t seed) {
  namespace fs = std::filesystem;
  if (!cfg.dataset.path && !cfg.dataset.synthetic) {
    throw aeaug::ContractError("prepare: give --data or a config with a dataset");
  }
  cfg.split.validate();
  const auto ds = aeaug::load_dataset(cfg.dataset);
  const auto prepared = aeaug::prepare_split(ds, cfg, seed);
  fs::create_directories(out_dir);
  aeaug::write_csv(prepared.train, fs::path(out_dir) / "train.csv");
  aeaug::write_csv(prepared.val, fs::path(out_dir) / "val.csv");
  aeaug::write_csv(prepared.test, fs::path(out_dir) / "test.csv");
  std::ofstream norm(fs::path(out_dir) / "norm_params.json");
  norm << nlohmann::json(prepared.norm).dump(2) << '\n';
  if (!norm) throw aeaug::ParseError("cannot write norm_params.json");
  std::cout << "train " << prepared.train.rows() << ", val " << prepared.val.rows() << ", test "
            << prepared.test.rows() << " rows; " << prepared.train.cols() << " features\n";
  return 0;
}

int cmd_report(const std::string& path, int precision) {
  std::ifstream in(path);
  if (!in) throw aeaug::ParseError("cannot open report '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw aeaug::ParseError("malformed report '" + path + "': " + e.what());
  }
  std::cout << aeaug::render_report(aeaug::report_from_json(j), precision);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Autoencoder latent-epoch augmentation for one-class anomaly detection"};
  app.require_subcommand(1);

  std::string config_path, data, columns, out_dir;
  bool no_header = false;
  std::uint64_t seed = 0;

  auto* prepare = app.add_subcommand("prepare", "Encode, split and normalize a dataset to CSV");
  prepare->add_option("-c,--config", config_path, "Experiment config (JSON)");
  prepare->add_option("-d,--data", data, "CSV file (overrides the config dataset path)");
  prepare->add_option("--columns", columns, "Column kinds, one letter each: n/c/l");
  prepare->add_flag("--no-header", no_header, "The CSV has no header row");
  prepare->add_option("-o,--out", out_dir, "Output directory")->required();
  prepare->add_option("-s,--seed", seed, "Split seed");

  std::string methods, detectors;
  std::optional<std::uint64_t> run_seed;
  std::optional<std::size_t> repetitions, threads;
  auto* run = app.add_subcommand("run", "Run the full experiment and write report.json");
  run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("-o,--out", out_dir, "Output directory (overrides config)");
  run->add_option("-s,--seed", run_seed, "Base seed (overrides config)");
  run->add_option("-r,--repetitions", repetitions, "Repetition count (overrides config)");
  run->add_option("--methods", methods, "Comma-separated augmenters to run");
  run->add_option("--detectors", detectors, "Comma-separated detectors to run");
  run->add_option("-j,--threads", threads, "Worker threads for repetitions");

  std::string report_path;
  int precision = 3;
  auto* report = app.add_subcommand("report", "Render report.json as a table");
  report->add_option("report", report_path, "Path to report.json")->required();
  report->add_option("-p,--precision", precision, "Digits after the decimal point");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) return cmd_prepare(config_from_flags(config_path, data, columns, no_header), out_dir, seed);
    if (*report) return cmd_report(report_path, precision);

    auto cfg = aeaug::load_experiment_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (run_seed) cfg.seed = *run_seed;
    if (repetitions) cfg.repetitions = *repetitions;
    if (threads) cfg.threads = *threads;
    if (!methods.empty()) {
      cfg.augmenters.clear();
      for (const auto& m : split_list(methods)) cfg.augmenters.push_back(aeaug::parse_augment_method(m));
    }
    if (!detectors.empty()) {
      cfg.detectors.clear();
      for (const auto& d : split_list(detectors)) cfg.detectors.push_back(aeaug::parse_detector(d));
    }
    const auto result = aeaug::run_experiment(cfg);
    std::cout << aeaug::render_report(result);
    if (!cfg.output_dir.empty()) std::cout << "wrote " << cfg.output_dir << "/report.json\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "aeaug: error: " << e.what() << '\n';
    return 1;
  }
}
