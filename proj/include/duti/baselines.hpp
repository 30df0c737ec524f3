#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "duti/learners.hpp"
#include "duti/types.hpp"

namespace duti {

// A ranked list of suspected items, best first. Scores align with order.
// fix_value (regression) or fix_label (classification) align with order when
// the method suggests fixes; empty otherwise.
struct BaselineRanking {
  std::vector<int> order;
  std::vector<double> score;
  std::vector<double> fix_value;
  std::vector<int> fix_label;
};

// Influence of each training label on the mean trusted loss, through the
// trained model: the trusted term of the debugging gradient with unit
// confidences, evaluated at the unperturbed labels. Regression ranks all items
// by |I_i| (sign gives the fix direction: positive means decrease y_i).
// Classification flags items whose original-label coordinate I_{i,y_i} is
// strictly positive, ranks by that value, and suggests the label minimizing
// I_{i,j}. Returns an empty ranking when no coordinate qualifies.
BaselineRanking influence_rank(const Dataset& data, const TrustedSet& trusted,
                               const LearnerConfig& config);

// Distance to the nearest trusted item after per-dimension z-scoring with the
// training statistics (zero-variance dimensions dropped). Regression ranks all
// items ascending by distance. Classification keeps only items whose label
// disagrees with their nearest trusted item and suggests that item's label.
BaselineRanking nn_rank(const Dataset& data, const TrustedSet& trusted);

// Kernel-similarity label-consistency search for binary tasks: labels mapped
// to s in {-1, +1}, eta_i = -1 marks item i as mislabeled, and the search
// maximizes eta^T Q eta, Q_ij = s_i s_j k(x_i, x_j), over flip sets of exact
// size n_pos among positively labeled items and n_neg among negatively labeled
// ones. Bandwidth: median heuristic on the z-scored features. Training items
// exactly matching a trusted item's features are pinned. Greedy swap local
// search with seeded restarts; flagged items are ordered by the objective drop
// their flip would forfeit, and each fix is the opposite label.
BaselineRanking lnd_oracle(const Dataset& data, const TrustedSet& trusted, int n_pos,
                           int n_neg, std::uint64_t seed = 0, int restarts = 10);

double lnd_objective(const Eigen::MatrixXd& q, const Eigen::VectorXd& eta);

// The similarity matrix that search runs on: Q_ij = s_i s_j k(x_i, x_j) with
// the kernel built on z-scored features at the median-heuristic bandwidth.
Eigen::MatrixXd lnd_similarity(const Dataset& data);

}  // namespace duti
