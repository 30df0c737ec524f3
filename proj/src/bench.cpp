#include "duti/bench.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "duti/rng.hpp"

namespace duti {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

std::vector<int> definitional_bugs(const Dataset& d) {
  std::vector<int> bugs;
  if (d.task == Task::kRegression) {
    for (int i = 0; i < d.n(); ++i)
      if (d.y[i] != (*d.true_y)[i]) bugs.push_back(i);
  } else {
    for (int i = 0; i < d.n(); ++i)
      if (d.labels[i] != (*d.true_labels)[i]) bugs.push_back(i);
  }
  return bugs;
}

Eigen::VectorXi klr_argmax(const Eigen::MatrixXd& prob) {
  Eigen::VectorXi out(prob.rows());
  for (Eigen::Index i = 0; i < prob.rows(); ++i) {
    Eigen::Index arg = 0;
    prob.row(i).maxCoeff(&arg);
    out[i] = static_cast<int>(arg);
  }
  return out;
}

}  // namespace

SimulatedCorpus gen_harry_potter(std::uint64_t seed, int n) {
  if (n < 20) throw std::invalid_argument("gen_harry_potter: need n >= 20");
  const int n_bias = 12;
  CounterRng bg(seed, 0);
  CounterRng cluster(seed, 1);
  CounterRng placer(seed, 2);

  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi given(n), truth(n);

  std::vector<int> slots(n);
  std::iota(slots.begin(), slots.end(), 0);
  placer.shuffle(slots.begin(), slots.end());

  for (int j = 0; j < n_bias; ++j) {
    const int i = slots[j];
    x(i, 0) = cluster.uniform(0.0, 0.3);
    x(i, 1) = cluster.uniform(0.6, 1.0);
    truth[i] = 1;
    given[i] = 0;  // systematically refused despite qualifying
  }
  for (int j = n_bias; j < n; ++j) {
    const int i = slots[j];
    for (;;) {
      const double h = bg.next_double();
      const double e = bg.next_double();
      const bool in_bias_box = h <= 0.3 && e >= 0.6;
      const bool near_boundary = std::abs(e - 0.5) < 0.05;
      if (in_bias_box || near_boundary) continue;
      x(i, 0) = h;
      x(i, 1) = e;
      truth[i] = e >= 0.5 ? 1 : 0;
      given[i] = truth[i];
      break;
    }
  }

  SimulatedCorpus c;
  c.train = make_classification_dataset(x, given, 2);
  c.train.true_labels = truth;
  Eigen::MatrixXd tx(2, 2);
  tx << 0.10, 0.75, 0.10, 0.25;
  Eigen::VectorXi tl(2);
  tl << 1, 0;
  c.trusted = make_classification_trusted(tx, tl);
  c.bug_indices = definitional_bugs(c.train);
  c.generator = "harry-potter";
  c.seed = seed;
  c.params = {{"n", static_cast<double>(n)}};
  return c;
}

SimulatedCorpus gen_sine_regression(std::uint64_t seed, int n) {
  if (n < 30) throw std::invalid_argument("gen_sine_regression: need n >= 30");
  const int n_bugs = 24;
  CounterRng xs(seed, 0);
  CounterRng noise(seed, 1);

  // redraw whole samples until the flip region holds enough points, so the
  // corpus stays a pure function of the seed
  Eigen::VectorXd x(n);
  for (;;) {
    int inside = 0;
    for (int i = 0; i < n; ++i) {
      x[i] = xs.uniform(0.0, 2.0);
      if (x[i] > 1.0 && x[i] < 1.5) ++inside;
    }
    if (inside >= n_bugs) break;
  }

  Eigen::VectorXd clean(n);
  for (int i = 0; i < n; ++i) clean[i] = std::sin(kTwoPi * x[i]) + 0.1 * noise.normal();

  // the 24 nearest the second peak; every point inside (1, 1.5) is nearer
  // 1.25 than any point outside
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](int a, int b) {
    const double da = std::abs(x[a] - 1.25), db = std::abs(x[b] - 1.25);
    if (da != db) return da < db;
    return a < b;
  });

  Eigen::VectorXd given = clean;
  for (int j = 0; j < n_bugs; ++j) given[idx[j]] = -clean[idx[j]];

  SimulatedCorpus c;
  c.train = make_regression_dataset(x, given);
  c.train.true_y = clean;
  // left flank of the flipped peak, deliberately not covering the bug region
  Eigen::MatrixXd tx(3, 1);
  tx << 1.05, 1.10, 1.15;
  Eigen::VectorXd ty(3);
  for (int i = 0; i < 3; ++i) ty[i] = std::sin(kTwoPi * tx(i, 0));
  c.trusted = make_regression_trusted(tx, ty);
  c.bug_indices = definitional_bugs(c.train);
  c.generator = "sine";
  c.seed = seed;
  c.params = {{"n", static_cast<double>(n)}};
  return c;
}

SimulatedCorpus gen_fairness_bias(const Eigen::MatrixXd& x_with_protected,
                                  const Eigen::VectorXi& labels, int protected_col,
                                  const FairnessSizes& sizes, std::uint64_t seed,
                                  const LearnerConfig* fstar_config) {
  const int rows = static_cast<int>(x_with_protected.rows());
  const int d = static_cast<int>(x_with_protected.cols());
  if (labels.size() != rows) throw std::invalid_argument("gen_fairness_bias: label length mismatch");
  if (protected_col < 0 || protected_col >= d)
    throw std::invalid_argument("gen_fairness_bias: protected column out of range");
  std::vector<int> prot, other;
  for (int i = 0; i < rows; ++i) {
    const double v = x_with_protected(i, protected_col);
    if (v != 0.0 && v != 1.0)
      throw std::invalid_argument("gen_fairness_bias: protected column must be 0/1");
    if (labels[i] != 0 && labels[i] != 1)
      throw std::invalid_argument("gen_fairness_bias: labels must be 0/1");
    (v == 1.0 ? prot : other).push_back(i);
  }
  const int need_prot = sizes.trusted_per_group + sizes.train_protected;
  const int need_other = sizes.trusted_per_group + sizes.train_unprotected + 2;
  if (static_cast<int>(prot.size()) < need_prot || static_cast<int>(other.size()) < need_other)
    throw std::invalid_argument("gen_fairness_bias: group too small for requested partition");

  CounterRng rng(seed, 0);
  rng.shuffle(prot.begin(), prot.end());
  rng.shuffle(other.begin(), other.end());

  std::vector<int> a_rows, b_rows, c_rows;
  a_rows.insert(a_rows.end(), prot.begin(), prot.begin() + sizes.trusted_per_group);
  a_rows.insert(a_rows.end(), other.begin(), other.begin() + sizes.trusted_per_group);
  b_rows.insert(b_rows.end(), prot.begin() + sizes.trusted_per_group,
                prot.begin() + sizes.trusted_per_group + sizes.train_protected);
  b_rows.insert(b_rows.end(), other.begin() + sizes.trusted_per_group,
                other.begin() + sizes.trusted_per_group + sizes.train_unprotected);
  c_rows.assign(other.begin() + sizes.trusted_per_group + sizes.train_unprotected, other.end());

  auto strip = [&](const std::vector<int>& which) {
    Eigen::MatrixXd out(which.size(), d - 1);
    for (size_t r = 0; r < which.size(); ++r) {
      int cc = 0;
      for (int j = 0; j < d; ++j)
        if (j != protected_col) out(r, cc++) = x_with_protected(which[r], j);
    }
    return out;
  };
  auto pick_labels = [&](const std::vector<int>& which) {
    Eigen::VectorXi out(which.size());
    for (size_t r = 0; r < which.size(); ++r) out[r] = labels[which[r]];
    return out;
  };

  const Eigen::MatrixXd xc = strip(c_rows);
  LearnerConfig fcfg;
  if (fstar_config) {
    fcfg = *fstar_config;
  } else {
    fcfg.lambda = 1e-3;
    fcfg.kernel.sigma = median_heuristic_bandwidth(xc);
  }
  const KernelMatrix kc = rbf_kernel_matrix(xc, fcfg.kernel);
  const ModelParams fstar =
      train_klr_weighted(kc, one_hot(pick_labels(c_rows), 2), fcfg.lambda);

  const Eigen::MatrixXd xa = strip(a_rows);
  const Eigen::MatrixXd xb = strip(b_rows);
  const Eigen::VectorXi ya = klr_argmax(predict_klr(rbf_kernel(xa, xc, fcfg.kernel.sigma), fstar));
  const Eigen::VectorXi yb_true =
      klr_argmax(predict_klr(rbf_kernel(xb, xc, fcfg.kernel.sigma), fstar));

  SimulatedCorpus c;
  c.train = make_classification_dataset(xb, pick_labels(b_rows), 2);
  c.train.true_labels = yb_true;
  c.trusted = make_classification_trusted(xa, ya);
  c.bug_indices = definitional_bugs(c.train);
  c.generator = "fairness";
  c.seed = seed;
  c.params = {{"trusted_per_group", static_cast<double>(sizes.trusted_per_group)},
              {"train_protected", static_cast<double>(sizes.train_protected)},
              {"train_unprotected", static_cast<double>(sizes.train_unprotected)},
              {"reference_pool", static_cast<double>(c_rows.size())}};
  return c;
}

SimulatedCorpus gen_noisy_relabel_multiclass(std::uint64_t seed, int k, int n,
                                             double noise_level) {
  if (k < 3) throw std::invalid_argument("gen_noisy_relabel_multiclass: need k >= 3");
  if (n < 4 * k) throw std::invalid_argument("gen_noisy_relabel_multiclass: need n >= 4k");
  if (noise_level < 0.0)
    throw std::invalid_argument("gen_noisy_relabel_multiclass: negative noise level");
  const double radius = 2.0;
  const double spread = 0.8;
  const int trusted_per_class = 16;
  const int clean_per_class = 40;

  auto blob = [&](CounterRng& rng, int cls) {
    Eigen::RowVector2d p;
    p << radius * std::cos(kTwoPi * cls / k) + spread * rng.normal(),
        radius * std::sin(kTwoPi * cls / k) + spread * rng.normal();
    return p;
  };

  CounterRng train_rng(seed, 0);
  CounterRng trusted_rng(seed, 1);
  CounterRng clean_rng(seed, 2);
  CounterRng blur_rng(seed, 3);

  const int n_clean = clean_per_class * k;
  Eigen::MatrixXd xc(n_clean, 2);
  Eigen::VectorXi yc(n_clean);
  for (int i = 0; i < n_clean; ++i) {
    yc[i] = i % k;
    xc.row(i) = blob(clean_rng, yc[i]);
  }
  LearnerConfig fcfg;
  fcfg.lambda = 1e-3;
  fcfg.kernel.sigma = median_heuristic_bandwidth(xc);
  const ModelParams fstar =
      train_klr_weighted(rbf_kernel_matrix(xc, fcfg.kernel), one_hot(yc, k), fcfg.lambda);

  Eigen::MatrixXd x(n, 2);
  Eigen::VectorXi truth(n);
  for (int i = 0; i < n; ++i) {
    truth[i] = i % k;
    x.row(i) = blob(train_rng, truth[i]);
  }
  Eigen::MatrixXd blurred = x;
  for (int i = 0; i < n; ++i) {
    blurred(i, 0) += noise_level * blur_rng.normal();
    blurred(i, 1) += noise_level * blur_rng.normal();
  }
  const Eigen::VectorXi given =
      klr_argmax(predict_klr(rbf_kernel(blurred, xc, fcfg.kernel.sigma), fstar));

  const int n_tr = trusted_per_class * k;
  Eigen::MatrixXd xt(n_tr, 2);
  Eigen::VectorXi yt(n_tr);
  for (int i = 0; i < n_tr; ++i) {
    yt[i] = i % k;
    xt.row(i) = blob(trusted_rng, yt[i]);
  }

  SimulatedCorpus c;
  c.train = make_classification_dataset(x, given, k);
  c.train.true_labels = truth;
  c.trusted = make_classification_trusted(xt, yt);
  c.bug_indices = definitional_bugs(c.train);
  c.generator = "noisy-multiclass";
  c.seed = seed;
  c.params = {{"k", static_cast<double>(k)},
              {"n", static_cast<double>(n)},
              {"noise_level", noise_level}};
  return c;
}

void make_synthetic_credit(std::uint64_t seed, int rows, int protected_rows,
                           Eigen::MatrixXd* x_with_protected, Eigen::VectorXi* labels,
                           int* protected_col) {
  if (protected_rows <= 0 || protected_rows >= rows)
    throw std::invalid_argument("make_synthetic_credit: bad protected count");
  CounterRng feat(seed, 0);
  CounterRng assign(seed, 1);
  CounterRng label_noise(seed, 2);

  const int d = 5;
  const Eigen::VectorXd w = (Eigen::VectorXd(d) << 1.0, -0.8, 0.6, 0.5, -0.4).finished();
  x_with_protected->resize(rows, d + 1);
  labels->resize(rows);

  std::vector<int> order(rows);
  std::iota(order.begin(), order.end(), 0);
  assign.shuffle(order.begin(), order.end());
  std::vector<char> is_prot(rows, 0);
  for (int j = 0; j < protected_rows; ++j) is_prot[order[j]] = 1;

  for (int i = 0; i < rows; ++i) {
    double score = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = feat.normal();
      (*x_with_protected)(i, j) = v;
      score += w[j] * v;
    }
    (*x_with_protected)(i, d) = is_prot[i] ? 1.0 : 0.0;
    // systematic penalty against the protected group, invisible in features
    score += 0.3 * label_noise.normal() - (is_prot[i] ? 2.4 : 0.0);
    (*labels)[i] = score > 0.0 ? 1 : 0;
  }
  *protected_col = d;
}

}  // namespace duti
