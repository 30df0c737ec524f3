#include "duti/types.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>
#include <string>

namespace duti {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

}  // namespace

Dataset make_regression_dataset(Eigen::MatrixXd x, Eigen::VectorXd y) {
  Dataset d;
  d.task = Task::kRegression;
  d.x = std::move(x);
  d.y = std::move(y);
  validate(d);
  return d;
}

Dataset make_classification_dataset(Eigen::MatrixXd x, Eigen::VectorXi labels,
                                    int num_classes) {
  Dataset d;
  d.task = Task::kClassification;
  d.x = std::move(x);
  d.labels = std::move(labels);
  d.num_classes = num_classes;
  validate(d);
  return d;
}

void validate(const Dataset& d) {
  require(d.x.rows() > 0, "dataset: empty feature matrix");
  require(d.x.allFinite(), "dataset: non-finite feature value");
  if (d.task == Task::kRegression) {
    require(d.y.size() == d.x.rows(), "dataset: y length differs from row count");
    require(d.y.allFinite(), "dataset: non-finite target");
    if (d.true_y) require(d.true_y->size() == d.x.rows(), "dataset: true_y length mismatch");
  } else {
    require(d.num_classes >= 2, "dataset: classification needs k >= 2");
    require(d.labels.size() == d.x.rows(), "dataset: label length differs from row count");
    for (Eigen::Index i = 0; i < d.labels.size(); ++i) {
      require(d.labels[i] >= 0 && d.labels[i] < d.num_classes,
              "dataset: label out of range at row " + std::to_string(i));
    }
    if (d.true_labels)
      require(d.true_labels->size() == d.x.rows(), "dataset: true_labels length mismatch");
  }
}

TrustedSet make_regression_trusted(Eigen::MatrixXd x, Eigen::VectorXd y,
                                   std::optional<Eigen::VectorXd> confidence) {
  TrustedSet t;
  t.x = std::move(x);
  t.y = std::move(y);
  t.confidence = confidence ? std::move(*confidence)
                            : Eigen::VectorXd::Constant(t.x.rows(), kDefaultConfidence);
  return t;
}

TrustedSet make_classification_trusted(Eigen::MatrixXd x, Eigen::VectorXi labels,
                                       std::optional<Eigen::VectorXd> confidence) {
  TrustedSet t;
  t.x = std::move(x);
  t.labels = std::move(labels);
  t.confidence = confidence ? std::move(*confidence)
                            : Eigen::VectorXd::Constant(t.x.rows(), kDefaultConfidence);
  return t;
}

void validate_trusted(const TrustedSet& t, const Dataset& d) {
  require(t.x.rows() > 0, "trusted: empty set");
  require(t.x.cols() == d.x.cols(), "trusted: feature dimension differs from training set");
  require(t.x.allFinite(), "trusted: non-finite feature value");
  require(t.confidence.size() == t.x.rows(), "trusted: confidence length mismatch");
  require((t.confidence.array() > 0.0).all(), "trusted: confidences must be positive");
  if (d.task == Task::kRegression) {
    require(t.y.size() == t.x.rows(), "trusted: y length mismatch");
    require(t.y.allFinite(), "trusted: non-finite target");
  } else {
    require(t.labels.size() == t.x.rows(), "trusted: label length mismatch");
    for (Eigen::Index i = 0; i < t.labels.size(); ++i) {
      require(t.labels[i] >= 0 && t.labels[i] < d.num_classes,
              "trusted: label out of range at row " + std::to_string(i));
    }
  }
}

Eigen::MatrixXd one_hot(const Eigen::VectorXi& labels, int k) {
  require(k >= 2, "one_hot: k must be at least 2");
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(labels.size(), k);
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      throw std::invalid_argument("one_hot: label out of range at row " + std::to_string(i));
    w(i, labels[i]) = 1.0;
  }
  return w;
}

DeltaState DeltaState::zeros_regression(int n) {
  DeltaState s;
  s.task = Task::kRegression;
  s.delta = Eigen::MatrixXd::Zero(n, 1);
  return s;
}

DeltaState DeltaState::one_hot_classification(const Eigen::VectorXi& labels, int k) {
  DeltaState s;
  s.task = Task::kClassification;
  s.delta = one_hot(labels, k);
  return s;
}

void DeltaState::validate() const {
  if (task == Task::kRegression) {
    if (delta.cols() != 1) throw std::logic_error("delta: regression state must be one column");
    return;
  }
  if (delta.cols() < 2) throw std::logic_error("delta: classification state needs k columns");
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    if ((delta.row(i).array() < -kRowSumTol).any() ||
        std::abs(delta.row(i).sum() - 1.0) > kRowSumTol) {
      throw std::logic_error("delta: row " + std::to_string(i) + " left the simplex");
    }
  }
}

std::uint64_t fingerprint_training(const Eigen::MatrixXd& x, const Eigen::MatrixXd& targets,
                                   double lambda, double sigma) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto eat = [&h](const double* p, Eigen::Index count) {
    for (Eigen::Index i = 0; i < count; ++i) {
      std::uint64_t bits;
      std::memcpy(&bits, &p[i], sizeof bits);
      h ^= bits;
      h *= 0x100000001b3ull;
    }
  };
  eat(x.data(), x.size());
  eat(targets.data(), targets.size());
  eat(&lambda, 1);
  eat(&sigma, 1);
  return h;
}

}  // namespace duti
