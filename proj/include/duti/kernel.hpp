#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <stdexcept>
#include <vector>

namespace duti {

struct KernelConfig {
  double sigma = 1.0;  // RBF bandwidth, > 0
};

// Gram matrix together with the bandwidth that produced it.
struct KernelMatrix {
  Eigen::MatrixXd k;  // symmetric PSD, unit diagonal
  KernelConfig config;

  int n() const { return static_cast<int>(k.rows()); }
};

// exp(-|a_i - b_j|^2 / (2 sigma^2)) for all row pairs. Squared distances use
// the expanded form and are clamped at zero before exponentiation.
template <typename DerivedA, typename DerivedB>
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixBase<DerivedA>& a,
                           const Eigen::MatrixBase<DerivedB>& b, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("rbf_kernel: sigma must be positive");
  if (a.cols() != b.cols())
    throw std::invalid_argument("rbf_kernel: feature dimensions differ");
  const Eigen::VectorXd an = a.rowwise().squaredNorm();
  const Eigen::VectorXd bn = b.rowwise().squaredNorm();
  Eigen::MatrixXd d2 = an.replicate(1, b.rows()) + bn.transpose().replicate(a.rows(), 1) -
                       2.0 * (a * b.transpose());
  d2 = d2.cwiseMax(0.0);
  return (-d2 / (2.0 * sigma * sigma)).array().exp().matrix();
}

// Square-case wrapper: mirrors the upper triangle and pins the diagonal so the
// result is exactly symmetric with unit diagonal.
inline KernelMatrix rbf_kernel_matrix(const Eigen::MatrixXd& x, KernelConfig config) {
  Eigen::MatrixXd k = rbf_kernel(x, x, config.sigma);
  k.triangularView<Eigen::StrictlyLower>() = k.triangularView<Eigen::StrictlyUpper>().transpose();
  k.diagonal().setOnes();
  return KernelMatrix{std::move(k), config};
}

// Median pairwise Euclidean distance over the strict upper triangle; even
// counts average the two central order statistics. Falls back to the mean of
// the positive distances when the median vanishes; throws std::domain_error
// when every pair coincides (or n < 2).
inline double median_heuristic_bandwidth(const Eigen::MatrixXd& x) {
  const auto n = x.rows();
  if (n < 2) throw std::domain_error("median_heuristic_bandwidth: need at least 2 points");
  std::vector<double> d;
  d.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) d.push_back((x.row(i) - x.row(j)).norm());
  const size_t c = d.size();
  std::nth_element(d.begin(), d.begin() + (c - 1) / 2, d.end());
  double med = d[(c - 1) / 2];
  if (c % 2 == 0) {
    const double hi = *std::min_element(d.begin() + c / 2, d.end());
    med = 0.5 * (med + hi);
  }
  if (med > 0.0) return med;
  double sum = 0.0;
  size_t pos = 0;
  for (double v : d)
    if (v > 0.0) {
      sum += v;
      ++pos;
    }
  if (pos == 0)
    throw std::domain_error("median_heuristic_bandwidth: all points are identical");
  return sum / static_cast<double>(pos);
}

}  // namespace duti
