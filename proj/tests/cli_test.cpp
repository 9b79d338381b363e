// Runs the built aeaug binary as a subprocess.

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "aeaug/experiment.hpp"
#include "test_util.hpp"

namespace {

struct Run {
  int status;
  std::string out;
  std::string err;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Run run_cli(const std::string& args, const testutil::TempDir& dir) {
  const auto out = dir / "stdout.txt";
  const auto err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + AEAUG_CLI + "\" " + args + " > \"" + out.string() + "\" 2> \"" +
                          err.string() + "\"";
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(out), slurp(err)};
}

void write_demo_csv(const std::filesystem::path& p) {
  std::ostringstream csv;
  csv << "a,proto,b,class\n";
  for (int i = 0; i < 60; ++i) {
    csv << i * 0.5 << ',' << (i % 3 == 0 ? "tcp" : "udp") << ',' << (i % 7) << ','
        << (i % 10 == 0 ? "attack" : "normal") << '\n';
  }
  testutil::write_file(p, csv.str());
}

TEST(Cli, PrepareMatchesInMemoryPipeline) {
  testutil::TempDir dir("cli_prepare");
  write_demo_csv(dir / "demo.csv");
  auto r = run_cli("prepare --data \"" + (dir / "demo.csv").string() + "\" --columns ncnl --seed 3 --out \"" +
                       (dir / "prep").string() + "\"",
                   dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("features"), std::string::npos);

  aeaug::ExperimentConfig cfg;
  cfg.dataset.path = (dir / "demo.csv").string();
  cfg.dataset.columns = aeaug::detail::parse_columns(nlohmann::json("ncnl"));
  const auto expected = aeaug::prepare_split(aeaug::load_dataset(cfg.dataset), cfg, 3);

  for (auto [name, want] : {std::pair{"train.csv", &expected.train}, {"val.csv", &expected.val},
                            {"test.csv", &expected.test}}) {
    auto got = aeaug::read_numeric_csv(dir / "prep" / name);
    EXPECT_EQ(got.matrix, want->matrix) << name;
    EXPECT_EQ(got.labels, want->labels) << name;
    EXPECT_EQ(got.feature_names, want->feature_names) << name;
  }
  const auto header = slurp(dir / "prep" / "train.csv").substr(0, 40);
  EXPECT_EQ(header.rfind("a,proto=tcp,proto=udp,b,label\n", 0), 0u) << header;

  auto norm = nlohmann::json::parse(slurp(dir / "prep" / "norm_params.json")).get<aeaug::NormParams>();
  EXPECT_EQ(norm.min, expected.norm.min);
  EXPECT_EQ(norm.max, expected.norm.max);
}

TEST(Cli, MissingInputFailsWithMessage) {
  testutil::TempDir dir("cli_missing");
  auto r = run_cli("prepare --data /nonexistent/file.csv --columns nl --out \"" + (dir / "o").string() + "\"", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("aeaug: error:"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("/nonexistent/file.csv"), std::string::npos) << r.err;

  r = run_cli("run --config /nonexistent/cfg.json", dir);
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("cannot open config"), std::string::npos) << r.err;

  r = run_cli("frobnicate", dir);
  EXPECT_NE(r.status, 0);
}

TEST(Cli, RunThenReport) {
  testutil::TempDir dir("cli_run");
  testutil::write_file(dir / "cfg.json", R"({
    "dataset": {"name": "tiny", "synthetic": {"n_normal": 120, "n_anomaly": 15, "dim": 4, "shift": 3.0, "seed": 1}},
    "train": {"n_epochs": 8},
    "occ": {"lof_k": 8, "isf_trees": 5},
    "repetitions": 3
  })");
  auto r = run_cli("run --config \"" + (dir / "cfg.json").string() + "\" --out \"" + (dir / "res").string() +
                       "\" --methods none,ae_epochs --detectors kde,isf -j 2",
                   dir);
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("ae_epochs"), std::string::npos);
  ASSERT_TRUE(std::filesystem::exists(dir / "res" / "report.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "res" / "boxplot.json"));
  EXPECT_TRUE(std::filesystem::exists(dir / "res" / "loss_history.csv"));
  EXPECT_TRUE(std::filesystem::exists(dir / "res" / "scores" / "rep2_ae_epochs_isf.csv"));

  auto report = aeaug::report_from_json(nlohmann::json::parse(slurp(dir / "res" / "report.json")));
  EXPECT_EQ(report.records.size(), 3u * 2u * 2u);

  auto rendered = run_cli("report \"" + (dir / "res" / "report.json").string() + "\"", dir);
  ASSERT_EQ(rendered.status, 0) << rendered.err;
  EXPECT_EQ(rendered.out, aeaug::render_report(report));

  auto bad = run_cli("report \"" + (dir / "cfg.json").string() + "\"", dir);
  EXPECT_NE(bad.status, 0);
  EXPECT_NE(bad.err.find("malformed report"), std::string::npos) << bad.err;
}

}  // namespace
