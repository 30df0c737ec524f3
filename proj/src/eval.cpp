#include "duti/eval.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace duti {

namespace {

std::vector<double> build_grid() {
  std::vector<double> g(21);
  for (int i = 0; i <= 20; ++i) g[i] = 0.05 * i;
  return g;
}

}  // namespace

const std::vector<double> kRecallGrid = build_grid();

PrCurve pr_curve(const std::vector<int>& ranked, const std::vector<int>& bug_indices) {
  if (bug_indices.empty()) throw std::invalid_argument("pr_curve: no bugs to recall");
  const std::unordered_set<int> bugs(bug_indices.begin(), bug_indices.end());
  PrCurve c;
  c.recall.reserve(ranked.size());
  c.precision.reserve(ranked.size());
  int hits = 0;
  for (size_t j = 0; j < ranked.size(); ++j) {
    hits += bugs.count(ranked[j]) ? 1 : 0;
    c.recall.push_back(static_cast<double>(hits) / static_cast<double>(bugs.size()));
    c.precision.push_back(static_cast<double>(hits) / static_cast<double>(j + 1));
  }
  return c;
}

double interpolated_precision(const PrCurve& curve, double r) {
  double best = 0.0;
  bool reached = false;
  for (size_t j = 0; j < curve.recall.size(); ++j) {
    if (curve.recall[j] >= r) {
      reached = true;
      best = std::max(best, curve.precision[j]);
    }
  }
  return reached ? best : 0.0;
}

std::vector<double> average_pr(const std::vector<PrCurve>& curves) {
  if (curves.empty()) throw std::invalid_argument("average_pr: no curves");
  std::vector<double> out(kRecallGrid.size(), 0.0);
  for (const PrCurve& c : curves)
    for (size_t g = 0; g < kRecallGrid.size(); ++g)
      out[g] += interpolated_precision(c, kRecallGrid[g]);
  for (double& v : out) v /= static_cast<double>(curves.size());
  return out;
}

double pr_auc(const std::vector<double>& averaged) {
  if (averaged.size() != kRecallGrid.size())
    throw std::invalid_argument("pr_auc: expected one value per grid point");
  double sum = 0.0;
  for (size_t g = 1; g < averaged.size(); ++g) sum += averaged[g];
  return sum / static_cast<double>(averaged.size() - 1);
}

FixCurve fix_curve(const std::vector<int>& ranked, const std::vector<int>& fix_labels,
                   const Eigen::VectorXi& true_labels, const std::vector<int>& bug_indices) {
  if (fix_labels.size() != ranked.size())
    throw std::invalid_argument("fix_curve: one suggested label per ranked item");
  const std::unordered_set<int> bugs(bug_indices.begin(), bug_indices.end());
  FixCurve c;
  c.examined.reserve(ranked.size());
  c.correct.reserve(ranked.size());
  int good = 0;
  for (size_t j = 0; j < ranked.size(); ++j) {
    const int i = ranked[j];
    if (i < 0 || i >= true_labels.size())
      throw std::invalid_argument("fix_curve: ranked index out of range");
    if (bugs.count(i) && fix_labels[j] == true_labels[i]) ++good;
    c.examined.push_back(static_cast<int>(j + 1));
    c.correct.push_back(good);
  }
  return c;
}

}  // namespace duti
