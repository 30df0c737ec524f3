#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <string>

#include <Eigen/Dense>

#include "doctest.h"
#include "duti/bench.hpp"
#include "duti/driver.hpp"
#include "duti/io.hpp"
#include "duti/types.hpp"

using namespace duti;
namespace fs = std::filesystem;

namespace {

// fresh per-process scratch directory under the build tree
fs::path scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() /
                 ("duti_io_test_" + std::to_string(::getpid()));
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string write_text(const std::string& name, const std::string& body) {
  const fs::path p = scratch() / name;
  std::ofstream out(p);
  out << body;
  return p.string();
}

bool message_has(const std::exception& e, const std::string& needle) {
  return std::string(e.what()).find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("regression training CSV survives a round trip bit for bit") {
  const SimulatedCorpus c = gen_sine_regression(12);
  const std::string path = (scratch() / "train_reg.csv").string();
  write_train_csv(path, c.train);
  const Dataset back = read_train_csv(path, Task::kRegression);
  CHECK(back.x == c.train.x);
  CHECK(back.y == c.train.y);
  CHECK(back.task == Task::kRegression);
}

TEST_CASE("classification training CSV survives a round trip") {
  const SimulatedCorpus c = gen_harry_potter(12);
  const std::string path = (scratch() / "train_cls.csv").string();
  write_train_csv(path, c.train);
  const Dataset back = read_train_csv(path, Task::kClassification);
  CHECK(back.x == c.train.x);
  CHECK(back.labels == c.train.labels);
  CHECK(back.num_classes == c.train.num_classes);
}

TEST_CASE("trusted CSV keeps confidences and defaults them when absent") {
  Eigen::MatrixXd tx(2, 1);
  tx << 0.25, 0.75;
  Eigen::VectorXd ty(2);
  ty << 1.5, -2.25;
  Eigen::VectorXd conf(2);
  conf << 3.0, 42.5;
  const TrustedSet t = make_regression_trusted(tx, ty, conf);
  const std::string path = (scratch() / "trusted.csv").string();
  write_trusted_csv(path, t, Task::kRegression);
  const TrustedSet back = read_trusted_csv(path, Task::kRegression, 0);
  CHECK(back.x == t.x);
  CHECK(back.y == t.y);
  CHECK(back.confidence == t.confidence);

  const std::string bare = write_text("bare_trusted.csv",
                                      "feature_0,label\n0.5,1\n0.25,0\n");
  const TrustedSet defaulted = read_trusted_csv(bare, Task::kClassification, 2);
  REQUIRE(defaulted.m() == 2);
  CHECK(defaulted.confidence[0] == kDefaultConfidence);
  CHECK(defaulted.confidence[1] == kDefaultConfidence);
  CHECK(defaulted.labels[0] == 1);
}

TEST_CASE("CSV errors carry the file, line, and column context") {
  const std::string no_label = write_text("no_label.csv", "feature_0\n1.0\n");
  CHECK_THROWS_WITH_AS(read_train_csv(no_label, Task::kRegression),
                       doctest::Contains("missing column label"), ParseError);

  const std::string no_features = write_text("no_features.csv", "label\n1\n");
  CHECK_THROWS_WITH_AS(read_train_csv(no_features, Task::kClassification),
                       doctest::Contains("no feature_* columns"), ParseError);

  const std::string bad_number =
      write_text("bad_number.csv", "feature_0,label\n0.5,1.0\nabc,2.0\n");
  try {
    read_train_csv(bad_number, Task::kRegression);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(message_has(e, ":3:"));  // physical line of the bad row
    CHECK(message_has(e, "bad number"));
    CHECK(message_has(e, "feature_0"));
  }

  const std::string ragged =
      write_text("ragged.csv", "feature_0,label\n0.5,1.0\n0.25\n");
  CHECK_THROWS_WITH_AS(read_train_csv(ragged, Task::kRegression),
                       doctest::Contains("expected 2 columns, got 1"), ParseError);

  const std::string empty = write_text("empty.csv", "");
  CHECK_THROWS_WITH_AS(read_train_csv(empty, Task::kRegression),
                       doctest::Contains("missing header row"), ParseError);

  const std::string header_only = write_text("header_only.csv", "feature_0,label\n");
  CHECK_THROWS_WITH_AS(read_train_csv(header_only, Task::kRegression),
                       doctest::Contains("no data rows"), ParseError);

  const std::string bad_label =
      write_text("bad_label.csv", "feature_0,label\n0.5,1.5\n");
  CHECK_THROWS_WITH_AS(read_train_csv(bad_label, Task::kClassification),
                       doctest::Contains("not an integer"), ParseError);
}

TEST_CASE("truth JSON round trips both tasks") {
  const SimulatedCorpus reg = gen_sine_regression(13);
  const std::string rp = (scratch() / "truth_reg.json").string();
  write_truth_json(rp, reg);
  const Truth rt = read_truth_json(rp);
  CHECK(rt.task == Task::kRegression);
  CHECK(rt.n == reg.train.n());
  CHECK(rt.bug_indices == reg.bug_indices);
  CHECK(rt.true_y == *reg.train.true_y);

  const SimulatedCorpus cls = gen_harry_potter(13);
  const std::string cp = (scratch() / "truth_cls.json").string();
  write_truth_json(cp, cls);
  const Truth ct = read_truth_json(cp);
  CHECK(ct.task == Task::kClassification);
  CHECK(ct.bug_indices == cls.bug_indices);
  CHECK(ct.true_labels == *cls.train.true_labels);
}

TEST_CASE("debug report JSON preserves the trajectory and ranking") {
  const SimulatedCorpus c = gen_sine_regression(14);
  DriverConfig dc;
  dc.learner.lambda = 1e-3;
  dc.learner.kernel.sigma = 0.25;
  dc.budget = 6;
  dc.seed = 14;
  const DebugReport report = run_duti(c.train, c.trusted, dc);
  REQUIRE(!report.ranking.empty());

  const std::string path = (scratch() / "report.json").string();
  write_report_json(path, report);
  const DebugReport back = read_report_json(path);

  CHECK(back.task == report.task);
  CHECK(back.n == report.n);
  CHECK(back.gamma0 == report.gamma0);
  CHECK(back.budget == report.budget);
  CHECK(back.lambda == report.lambda);
  CHECK(back.sigma == report.sigma);
  CHECK(back.seed == report.seed);
  CHECK(back.all_rounds_converged == report.all_rounds_converged);
  REQUIRE(back.trajectory.size() == report.trajectory.size());
  for (size_t r = 0; r < back.trajectory.size(); ++r) {
    CHECK(back.trajectory[r].t == report.trajectory[r].t);
    CHECK(back.trajectory[r].gamma == report.trajectory[r].gamma);
    CHECK(back.trajectory[r].converged == report.trajectory[r].converged);
    CHECK(back.trajectory[r].flags == report.trajectory[r].flags);
    CHECK(back.trajectory[r].delta == report.trajectory[r].delta);
  }
  REQUIRE(back.ranking.size() == report.ranking.size());
  for (size_t r = 0; r < back.ranking.size(); ++r) {
    CHECK(back.ranking[r].index == report.ranking[r].index);
    CHECK(back.ranking[r].first_round == report.ranking[r].first_round);
    CHECK(back.ranking[r].deviation == report.ranking[r].deviation);
    CHECK(back.ranking[r].fix_value == report.ranking[r].fix_value);
    CHECK(back.ranking[r].fix_label == report.ranking[r].fix_label);
  }

  const LoadedRanking loaded = read_ranking_json(path);
  CHECK(loaded.kind == "debug");
  CHECK(loaded.n == report.n);
  REQUIRE(loaded.order.size() == report.ranking.size());
  for (size_t r = 0; r < loaded.order.size(); ++r) {
    CHECK(loaded.order[r] == report.ranking[r].index);
    CHECK(loaded.fix_value[r] == report.ranking[r].fix_value);
  }
}

TEST_CASE("baseline JSON loads into the common ranking view") {
  BaselineRanking rank;
  rank.order = {4, 0, 2};
  rank.score = {3.0, 2.0, 1.0};
  rank.fix_label = {1, 0, 1};
  const std::string path = (scratch() / "baseline.json").string();
  write_baseline_json(path, rank, "nn", Task::kClassification, 6);

  const LoadedRanking loaded = read_ranking_json(path);
  CHECK(loaded.kind == "baseline");
  CHECK(loaded.task == Task::kClassification);
  CHECK(loaded.n == 6);
  CHECK(loaded.order == rank.order);
  CHECK(loaded.fix_label == rank.fix_label);
}

TEST_CASE("JSON schema and contents are checked on load") {
  const std::string bad_schema = write_text(
      "bad_schema.json", R"({"schema":"other/9","kind":"truth","task":"regression"})");
  CHECK_THROWS_WITH_AS(read_truth_json(bad_schema),
                       doctest::Contains("expected schema duti/1"), ParseError);

  const std::string wrong_kind = write_text(
      "wrong_kind.json",
      R"({"schema":"duti/1","kind":"debug","task":"regression","n":3})");
  CHECK_THROWS_WITH_AS(read_truth_json(wrong_kind), doctest::Contains("expected kind"),
                       ParseError);

  const std::string short_truth = write_text(
      "short_truth.json",
      R"({"schema":"duti/1","kind":"truth","task":"regression","n":3,)"
      R"("bug_indices":[0],"true_y":[1.0,2.0]})");
  CHECK_THROWS_WITH_AS(read_truth_json(short_truth),
                       doctest::Contains("truth length disagrees with n"), ParseError);

  const std::string oob = write_text(
      "oob.json",
      R"({"schema":"duti/1","kind":"baseline","task":"classification","n":2,)"
      R"("method":"nn","order":[5],"score":[1.0],"fix_label":[0]})");
  CHECK_THROWS_WITH_AS(read_ranking_json(oob),
                       doctest::Contains("ranked index out of range"), ParseError);

  CHECK_THROWS_AS(read_truth_json((scratch() / "absent.json").string()), ParseError);
}

TEST_CASE("curve CSVs are written with headers and one row per prefix") {
  const std::string pr = (scratch() / "pr.csv").string();
  write_pr_csv(pr, {1, 0, 2}, {0, 3});
  std::ifstream in(pr);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "examined,recall,precision");
  int rows = 0;
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 3);

  Eigen::VectorXi truth(4);
  truth << 1, 0, 1, 0;
  const std::string fx = (scratch() / "fixes.csv").string();
  write_fix_csv(fx, {1, 0, 2}, {0, 0, 0}, truth, {0, 3});
  std::ifstream fin(fx);
  REQUIRE(std::getline(fin, line));
  CHECK(line == "examined,correct");
}
