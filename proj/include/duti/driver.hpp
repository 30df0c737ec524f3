#pragma once

#include <cstdint>

#include "duti/debug_classification.hpp"
#include "duti/debug_regression.hpp"
#include "duti/learners.hpp"
#include "duti/types.hpp"

namespace duti {

struct DriverConfig {
  LearnerConfig learner;
  int budget = 10;           // b: loop runs while the union of flags has <= b items
  double gamma0 = 0.0;       // 0 means initial_gamma(data, trusted, learner)
  double gamma_floor = 0.0;  // 0 means gamma0 * 2^-30
  int max_rounds = 40;
  std::uint64_t seed = 0;  // recorded in the report
};

// Largest useful sparsity level: max-abs coordinate of the gamma = 0
// hypergradient at the starting delta (regression, delta = 0), or the max over
// i of coordinate (i, y_i) (classification, delta = one_hot(y)). The driver's
// gamma sequence is in per-coordinate threshold units: a solve at driver level
// gamma passes n * gamma to the inner objective, whose sparsity term carries a
// 1/n. At gamma0 the starting delta is exactly stationary, with equality at
// the argmax coordinate.
double initial_gamma(const Dataset& data, const TrustedSet& trusted,
                     const LearnerConfig& config);

// One continuation solve at driver-level gamma (regression path).
LassoResult solve_regression_round(const LassoSystem& sys, double gamma,
                                   const Eigen::VectorXd& init);
// One continuation solve at driver-level gamma (classification path).
PgdResult solve_classification_round(const ClsDebugProblem& p, double gamma,
                                     const Eigen::MatrixXd& delta_init,
                                     const ModelParams* warm_model,
                                     const PgdOptions& opts = {});

// Flags of one iterate: regression |delta_i| > kRegressionFlagTol,
// classification argmax_j delta_ij != y_i (ties to the lowest j).
std::vector<int> extract_flags(Task task, const Eigen::MatrixXd& delta,
                               const Eigen::VectorXi& labels);

// Ranking rule over the recorded rounds: earliest first-flag round, then
// larger deviation at that round, then lower index. Fix values are read from
// the last round in which the item was flagged.
std::vector<RankedFlag> rank_flags(const std::vector<RoundRecord>& trajectory,
                                   const Dataset& data);

// Continuation driver: gamma halves each round (gamma_t = ldexp(gamma0, -t)),
// warm-starting each solve at the previous round's iterate. Exits on the first
// round where the union of flags exceeds the budget, or on the gamma floor /
// round cap. Rounds whose inner solve fails to converge are recorded and
// contribute no flags. A nonpositive gamma0 yields an empty report.
DebugReport run_duti(const Dataset& data, const TrustedSet& trusted,
                     const DriverConfig& config);

}  // namespace duti
