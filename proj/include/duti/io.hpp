#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "duti/baselines.hpp"
#include "duti/bench.hpp"
#include "duti/types.hpp"

namespace duti {

// Input errors carry "path:line: what" messages.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kSchemaTag = "duti/1";

// Numeric CSV with a header row. Feature columns are feature_0 ..
// feature_{d-1} (contiguous from 0), plus label, plus confidence on trusted
// files (absent means kDefaultConfidence everywhere).
Dataset read_train_csv(const std::string& path, Task task);
TrustedSet read_trusted_csv(const std::string& path, Task task, int num_classes);
void write_train_csv(const std::string& path, const Dataset& data);
void write_trusted_csv(const std::string& path, const TrustedSet& trusted, Task task);

struct Truth {
  Task task = Task::kRegression;
  int n = 0;
  std::vector<int> bug_indices;
  Eigen::VectorXd true_y;
  Eigen::VectorXi true_labels;
};

void write_truth_json(const std::string& path, const SimulatedCorpus& corpus);
Truth read_truth_json(const std::string& path);

void write_report_json(const std::string& path, const DebugReport& report);
DebugReport read_report_json(const std::string& path);

void write_baseline_json(const std::string& path, const BaselineRanking& ranking,
                         const std::string& method, Task task, int n);
// Loads either report kind into the common (ranked order, fixes) view.
struct LoadedRanking {
  Task task = Task::kRegression;
  int n = 0;
  std::string kind;  // "debug" or "baseline"
  std::vector<int> order;
  std::vector<int> fix_label;
  std::vector<double> fix_value;
};
LoadedRanking read_ranking_json(const std::string& path);

void write_pr_csv(const std::string& path, const std::vector<int>& ranked,
                  const std::vector<int>& bug_indices);
void write_fix_csv(const std::string& path, const std::vector<int>& ranked,
                   const std::vector<int>& fix_labels, const Eigen::VectorXi& true_labels,
                   const std::vector<int>& bug_indices);

}  // namespace duti
