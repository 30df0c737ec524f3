#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "duti/learners.hpp"
#include "duti/types.hpp"

namespace duti {

// A generated corpus: buggy labels in train, ground truth in train.true_*,
// bug_indices == {i : labels[i] != true_labels[i]} ascending.
struct SimulatedCorpus {
  Dataset train;
  TrustedSet trusted;
  std::vector<int> bug_indices;
  std::string generator;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
};

// Two features (heritage, education) on [0,1]^2; true rule is education >=
// 0.5. Twelve points uniform on [0, 0.3] x [0.6, 1.0] carry label 0 against a
// true label of 1; the remaining points avoid that box and a +-0.05 band
// around the boundary and are labeled by the true rule. Trusted pair fixed at
// (0.10, 0.75) -> 1 and (0.10, 0.25) -> 0.
// Streams: 0 background points, 1 bias cluster, 2 row placement.
SimulatedCorpus gen_harry_potter(std::uint64_t seed, int n = 100);

// x ~ U[0,2], y = sin(2 pi x) + N(0, 0.1 std). The sample is redrawn until at
// least 24 points land in (1.0, 1.5); the 24 nearest x = 1.25 have y negated.
// Trusted: noiseless sin(2 pi x) at x in {1.05, 1.10, 1.15}, on one flank of
// the flipped peak so the bug region is not fully covered.
// Streams: 0 x draw, 1 noise.
SimulatedCorpus gen_sine_regression(std::uint64_t seed, int n = 100);

struct FairnessSizes {
  int trusted_per_group = 20;  // A: this many protected and unprotected each
  int train_protected = 170;   // B
  int train_unprotected = 170; // B; C takes every remaining unprotected row
};

// Bias-audit pipeline over a binary-labeled table with a 0/1 protected
// attribute column: partition into A (trusted pool), B (training set) and C
// (remaining unprotected rows), train a reference classifier f* on C, relabel
// A by f* to form the trusted set, keep B's original labels as the training
// labels, and define true labels on B as f*(B). The protected column is
// removed from all feature matrices. Streams: 0 partition shuffle.
SimulatedCorpus gen_fairness_bias(const Eigen::MatrixXd& x_with_protected,
                                  const Eigen::VectorXi& labels, int protected_col,
                                  const FairnessSizes& sizes, std::uint64_t seed,
                                  const LearnerConfig* fstar_config = nullptr);

// k Gaussian blobs with means on a circle. A clean split trains a reference
// classifier f*; training labels are f* evaluated on feature vectors blurred
// with N(0, noise_level std) while the stored features stay clean; true labels
// are the mixture components. Trusted: 16 held-out clean points per class.
// Streams: 0 train draw, 1 trusted draw, 2 clean-split draw, 3 blur noise.
SimulatedCorpus gen_noisy_relabel_multiclass(std::uint64_t seed, int k, int n,
                                             double noise_level);

// Synthetic credit table for exercising the fairness pipeline: numeric
// features, a 0/1 protected column, and labels biased against the protected
// group relative to the feature-only signal.
void make_synthetic_credit(std::uint64_t seed, int rows, int protected_rows,
                           Eigen::MatrixXd* x_with_protected, Eigen::VectorXi* labels,
                           int* protected_col);

}  // namespace duti
