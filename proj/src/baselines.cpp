#include "duti/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "duti/debug_classification.hpp"
#include "duti/debug_regression.hpp"
#include "duti/kernel.hpp"
#include "duti/rng.hpp"

namespace duti {

namespace {

// argsort with a tie-break on the index
std::vector<int> order_by(int n, const std::function<bool(int, int)>& before) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), before);
  return idx;
}

// z-score columns by the training statistics (population std), dropping
// zero-variance dimensions. Applies the same map to both matrices.
void normalize_features(const Eigen::MatrixXd& x, const Eigen::MatrixXd& t,
                        Eigen::MatrixXd* xn, Eigen::MatrixXd* tn) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  Eigen::RowVectorXd var =
      ((x.rowwise() - mean).array().square().colwise().sum() / x.rows()).matrix();
  std::vector<int> keep;
  for (int j = 0; j < x.cols(); ++j)
    if (var[j] > 0.0) keep.push_back(j);
  xn->resize(x.rows(), keep.size());
  tn->resize(t.rows(), keep.size());
  for (size_t c = 0; c < keep.size(); ++c) {
    const int j = keep[c];
    const double sd = std::sqrt(var[j]);
    xn->col(c) = (x.col(j).array() - mean[j]) / sd;
    tn->col(c) = (t.col(j).array() - mean[j]) / sd;
  }
}

}  // namespace

BaselineRanking influence_rank(const Dataset& data, const TrustedSet& trusted,
                               const LearnerConfig& config) {
  validate(data);
  validate_trusted(trusted, data);
  TrustedSet unit = trusted;
  unit.confidence.setOnes();

  BaselineRanking out;
  if (data.task == Task::kRegression) {
    const Eigen::VectorXd influence =
        regression_hypergradient_parts(data, unit, config, 0.0,
                                       Eigen::VectorXd::Zero(data.n()))
            .trusted_term;
    out.order = order_by(data.n(), [&](int a, int b) {
      const double da = std::abs(influence[a]), db = std::abs(influence[b]);
      if (da != db) return da > db;
      return a < b;
    });
    for (int i : out.order) out.score.push_back(influence[i]);
    return out;
  }

  const ClsDebugProblem p = make_cls_problem(data, unit, config);
  const ModelParams model = retrain(p, p.y_hot);
  const KktLinearization lin = kkt_linearize(p, p.y_hot, model.alpha);
  const Eigen::MatrixXd influence =
      classification_hypergradient_parts(p, 0.0, p.y_hot, model.alpha, lin).trusted_term;

  std::vector<int> flagged;
  for (int i = 0; i < p.n; ++i)
    if (influence(i, p.y[i]) > 0.0) flagged.push_back(i);
  std::sort(flagged.begin(), flagged.end(), [&](int a, int b) {
    const double da = influence(a, p.y[a]), db = influence(b, p.y[b]);
    if (da != db) return da > db;
    return a < b;
  });
  out.order = flagged;
  for (int i : out.order) {
    out.score.push_back(influence(i, p.y[i]));
    Eigen::Index arg = 0;
    influence.row(i).minCoeff(&arg);
    out.fix_label.push_back(static_cast<int>(arg));
  }
  return out;
}

BaselineRanking nn_rank(const Dataset& data, const TrustedSet& trusted) {
  validate(data);
  validate_trusted(trusted, data);
  Eigen::MatrixXd xn, tn;
  normalize_features(data.x, trusted.x, &xn, &tn);

  const int n = data.n();
  std::vector<double> dist(n);
  std::vector<int> nearest(n);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int j = 0; j < trusted.m(); ++j) {
      const double d = xn.cols() == 0 ? 0.0 : (xn.row(i) - tn.row(j)).norm();
      if (d < best) {
        best = d;
        arg = j;
      }
    }
    dist[i] = best;
    nearest[i] = arg;
  }

  BaselineRanking out;
  if (data.task == Task::kRegression) {
    out.order = order_by(n, [&](int a, int b) {
      if (dist[a] != dist[b]) return dist[a] < dist[b];
      return a < b;
    });
    for (int i : out.order) out.score.push_back(dist[i]);
    return out;
  }

  std::vector<int> flagged;
  for (int i = 0; i < n; ++i)
    if (data.labels[i] != trusted.labels[nearest[i]]) flagged.push_back(i);
  std::sort(flagged.begin(), flagged.end(), [&](int a, int b) {
    if (dist[a] != dist[b]) return dist[a] < dist[b];
    return a < b;
  });
  out.order = flagged;
  for (int i : out.order) {
    out.score.push_back(dist[i]);
    out.fix_label.push_back(trusted.labels[nearest[i]]);
  }
  return out;
}

double lnd_objective(const Eigen::MatrixXd& q, const Eigen::VectorXd& eta) {
  return eta.dot(q * eta);
}

Eigen::MatrixXd lnd_similarity(const Dataset& data) {
  validate(data);
  if (data.task != Task::kClassification || data.num_classes != 2)
    throw std::invalid_argument("lnd_similarity: binary classification required");
  const int n = data.n();
  Eigen::MatrixXd xn, unused;
  normalize_features(data.x, Eigen::MatrixXd(0, data.x.cols()), &xn, &unused);
  const double h = median_heuristic_bandwidth(xn);
  const Eigen::MatrixXd kh = rbf_kernel_matrix(xn, KernelConfig{h}).k;
  Eigen::VectorXd s(n);
  for (int i = 0; i < n; ++i) s[i] = data.labels[i] == 1 ? 1.0 : -1.0;
  return (s * s.transpose()).cwiseProduct(kh);
}

BaselineRanking lnd_oracle(const Dataset& data, const TrustedSet& trusted, int n_pos,
                           int n_neg, std::uint64_t seed, int restarts) {
  validate(data);
  validate_trusted(trusted, data);
  if (data.task != Task::kClassification || data.num_classes != 2)
    throw std::invalid_argument("lnd_oracle: binary classification required");
  const int n = data.n();
  if (n_pos < 0 || n_neg < 0)
    throw std::invalid_argument("lnd_oracle: flip counts must be nonnegative");

  const Eigen::MatrixXd q = lnd_similarity(data);

  // pin items that exactly coincide with a trusted item
  std::vector<int> pin(n, 0);  // 0 free, +1 keep, -1 forced flip
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < trusted.m(); ++j) {
      if ((data.x.row(i).array() == trusted.x.row(j).array()).all()) {
        pin[i] = data.labels[i] == trusted.labels[j] ? 1 : -1;
        break;
      }
    }
  }

  std::vector<int> free_by_class[2];
  int forced[2] = {0, 0};
  int keepers[2] = {0, 0};
  for (int i = 0; i < n; ++i) {
    const int c = data.labels[i];
    if (pin[i] == 0)
      free_by_class[c].push_back(i);
    else if (pin[i] == -1)
      ++forced[c];
    else
      ++keepers[c];
  }
  const int want[2] = {n_neg, n_pos};  // flips among label-0 and label-1 items
  for (int c = 0; c < 2; ++c) {
    if (want[c] < forced[c] || want[c] > forced[c] + static_cast<int>(free_by_class[c].size()))
      throw std::invalid_argument("lnd_oracle: flip count infeasible under trusted pinning");
  }

  Eigen::VectorXd best_eta;
  double best_obj = -std::numeric_limits<double>::infinity();

  for (int r = 0; r < restarts; ++r) {
    CounterRng rng(seed, /*stream=*/100 + r);
    Eigen::VectorXd eta = Eigen::VectorXd::Ones(n);
    for (int i = 0; i < n; ++i)
      if (pin[i] == -1) eta[i] = -1.0;
    for (int c = 0; c < 2; ++c) {
      std::vector<int> pool = free_by_class[c];
      rng.shuffle(pool.begin(), pool.end());
      for (int j = 0; j < want[c] - forced[c]; ++j) eta[pool[j]] = -1.0;
    }

    Eigen::VectorXd qeta = q * eta;
    double obj = eta.dot(qeta);

    // steepest within-class swaps until no move improves
    for (;;) {
      double best_gain = 1e-10;
      int best_a = -1, best_b = -1;
      for (int c = 0; c < 2; ++c) {
        const auto& pool = free_by_class[c];
        for (int a : pool) {
          if (eta[a] > 0) continue;  // a currently flipped
          for (int b : pool) {
            if (eta[b] < 0) continue;  // b currently kept
            const double gain = -4.0 * eta[a] * qeta[a] - 4.0 * eta[b] * qeta[b] +
                                4.0 * q(a, a) + 4.0 * q(b, b) +
                                8.0 * eta[a] * eta[b] * q(a, b);
            if (gain > best_gain) {
              best_gain = gain;
              best_a = a;
              best_b = b;
            }
          }
        }
      }
      if (best_a < 0) break;
      qeta += -2.0 * eta[best_a] * q.col(best_a) - 2.0 * eta[best_b] * q.col(best_b);
      eta[best_a] = -eta[best_a];
      eta[best_b] = -eta[best_b];
      obj = eta.dot(q * eta);
    }

    if (obj > best_obj ||
        (obj == best_obj && best_eta.size() &&
         std::lexicographical_compare(eta.data(), eta.data() + n, best_eta.data(),
                                      best_eta.data() + n))) {
      best_obj = obj;
      best_eta = eta;
    }
  }

  const Eigen::VectorXd qeta = q * best_eta;
  std::vector<int> flips;
  for (int i = 0; i < n; ++i)
    if (best_eta[i] < 0) flips.push_back(i);
  // order by the objective drop the flip would forfeit if undone
  std::vector<double> contrib(n, 0.0);
  for (int i : flips) contrib[i] = -4.0 * qeta[i] - 4.0 * q(i, i);
  std::sort(flips.begin(), flips.end(), [&](int a, int b) {
    if (contrib[a] != contrib[b]) return contrib[a] > contrib[b];
    return a < b;
  });

  BaselineRanking out;
  out.order = flips;
  for (int i : out.order) {
    out.score.push_back(contrib[i]);
    out.fix_label.push_back(1 - data.labels[i]);
  }
  return out;
}

}  // namespace duti
