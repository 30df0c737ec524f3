#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace duti {

enum class Task { kRegression, kClassification };

constexpr double kDefaultConfidence = 100.0;
// Simplex rows are accepted when the sum deviates from 1 by at most this.
constexpr double kRowSumTol = 1e-9;
// Regression items count as flagged when |delta_i| exceeds this.
constexpr double kRegressionFlagTol = 1e-6;

// Labeled training set. The true_* fields carry simulation ground truth and
// exist for evaluation only; debugger and baseline code never reads them.
struct Dataset {
  Task task = Task::kRegression;
  Eigen::MatrixXd x;       // n x d features
  Eigen::VectorXd y;       // regression targets, n (empty in classification)
  Eigen::VectorXi labels;  // class ids in [0, k), n (empty in regression)
  int num_classes = 0;     // k; 0 in regression

  std::optional<Eigen::VectorXd> true_y;
  std::optional<Eigen::VectorXi> true_labels;

  int n() const { return static_cast<int>(x.rows()); }
  int dim() const { return static_cast<int>(x.cols()); }
};

Dataset make_regression_dataset(Eigen::MatrixXd x, Eigen::VectorXd y);
Dataset make_classification_dataset(Eigen::MatrixXd x, Eigen::VectorXi labels,
                                    int num_classes);
// Throws std::invalid_argument on shape mismatch, NaN/Inf features, label out
// of range, or k < 2 in classification.
void validate(const Dataset& d);

// Items whose labels are taken as correct, with per-item confidence c_i > 0.
struct TrustedSet {
  Eigen::MatrixXd x;  // m x d
  Eigen::VectorXd y;
  Eigen::VectorXi labels;
  Eigen::VectorXd confidence;  // m entries, filled with kDefaultConfidence

  int m() const { return static_cast<int>(x.rows()); }
};

TrustedSet make_regression_trusted(Eigen::MatrixXd x, Eigen::VectorXd y,
                                   std::optional<Eigen::VectorXd> confidence = {});
TrustedSet make_classification_trusted(Eigen::MatrixXd x, Eigen::VectorXi labels,
                                       std::optional<Eigen::VectorXd> confidence = {});
void validate_trusted(const TrustedSet& t, const Dataset& d);

// Row r is the indicator of labels[r]. Throws std::invalid_argument naming the
// first offending row if a label falls outside [0, k).
Eigen::MatrixXd one_hot(const Eigen::VectorXi& labels, int k);

// Label perturbation under optimization. Regression: n x 1 additive shift on
// y. Classification: n x k with rows on the probability simplex.
struct DeltaState {
  Task task = Task::kRegression;
  Eigen::MatrixXd delta;

  static DeltaState zeros_regression(int n);
  static DeltaState one_hot_classification(const Eigen::VectorXi& labels, int k);
  // Throws std::logic_error if a classification row leaves the simplex by more
  // than kRowSumTol or a regression state is not a single column.
  void validate() const;
};

// Trained kernel model. alpha is n x 1 for regression, n x k for
// classification. kkt_residual is the max-norm stationarity residual at
// return; newton_iterations stays 0 for closed-form solves.
struct ModelParams {
  Eigen::MatrixXd alpha;
  double lambda = 0.0;
  double sigma = 0.0;
  int newton_iterations = 0;
  bool converged = true;
  double kkt_residual = 0.0;
  std::uint64_t train_fingerprint = 0;
};

std::uint64_t fingerprint_training(const Eigen::MatrixXd& x,
                                   const Eigen::MatrixXd& targets, double lambda,
                                   double sigma);

// One gamma step of the continuation path.
struct RoundRecord {
  int t = 0;
  double gamma = 0.0;
  bool converged = true;
  std::vector<int> flags;  // ascending item indices flagged at this round
  Eigen::MatrixXd delta;   // iterate at this round, n x 1 or n x k
};

struct RankedFlag {
  int index = 0;
  int first_round = 0;      // earliest t whose flag set contains the item
  double deviation = 0.0;   // |delta_i| or 1 - delta_{i,y_i} at first_round
  double fix_value = 0.0;   // y_i + delta_i at the last flagged round
  int fix_label = -1;       // argmax_j delta_ij at the last flagged round
};

// Items flagged across the path, ordered by the ranking rule: first_round
// ascending, deviation descending, index ascending.
struct FlagSet {
  std::vector<RankedFlag> items;
};

struct DebugReport {
  Task task = Task::kRegression;
  int n = 0;
  int k = 0;
  double gamma0 = 0.0;
  int budget = 0;
  double lambda = 0.0;
  double sigma = 0.0;
  std::uint64_t seed = 0;
  std::vector<RoundRecord> trajectory;
  std::vector<RankedFlag> ranking;
  bool all_rounds_converged = true;
};

}  // namespace duti
