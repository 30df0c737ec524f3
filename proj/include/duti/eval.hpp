#pragma once

#include <Eigen/Dense>
#include <vector>

#include "duti/types.hpp"

namespace duti {

// Point j (0-based j-1) is computed from the top-j prefix of the ranking:
// recall = |top_j intersect bugs| / |bugs|, precision = |top_j intersect bugs| / j.
struct PrCurve {
  std::vector<double> recall;
  std::vector<double> precision;
};

// Throws std::invalid_argument when bug_indices is empty.
PrCurve pr_curve(const std::vector<int>& ranked, const std::vector<int>& bug_indices);

// Max precision among points with recall >= r; 0 when the curve never gets there.
double interpolated_precision(const PrCurve& curve, double r);

// Recall grid 0.00, 0.05, ..., 1.00 (21 points), precision interpolated per
// curve and averaged pointwise.
extern const std::vector<double> kRecallGrid;
std::vector<double> average_pr(const std::vector<PrCurve>& curves);

// Mean interpolated precision over the positive grid points of one averaged
// curve (21 values as produced by average_pr).
double pr_auc(const std::vector<double>& averaged);

// Cumulative correct fixes along a ranking: entry j counts ranked items among
// the top-(j+1) that are true bugs and whose suggested label equals the true
// label.
struct FixCurve {
  std::vector<int> examined;
  std::vector<int> correct;
};

FixCurve fix_curve(const std::vector<int>& ranked, const std::vector<int>& fix_labels,
                   const Eigen::VectorXi& true_labels, const std::vector<int>& bug_indices);

}  // namespace duti
