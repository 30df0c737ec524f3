#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "doctest.h"
#include "duti/kernel.hpp"
#include "duti/learners.hpp"
#include "duti/rng.hpp"
#include "duti/types.hpp"

using namespace duti;

namespace {

Eigen::MatrixXd random_x(std::uint64_t seed, int n, int d) {
  CounterRng rng(seed, 0);
  Eigen::MatrixXd x(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) x(i, j) = rng.normal();
  return x;
}

// all k^2 blocks assembled directly, no row-sum shortcut
Eigen::MatrixXd naive_klr_hessian(const Eigen::MatrixXd& k, const Eigen::MatrixXd& prob,
                                  double lambda) {
  const Eigen::Index n = k.rows();
  const Eigen::Index c = prob.cols();
  Eigen::MatrixXd h(n * c, n * c);
  for (Eigen::Index j = 0; j < c; ++j)
    for (Eigen::Index l = 0; l < c; ++l) {
      Eigen::VectorXd w = -(prob.col(j).cwiseProduct(prob.col(l)));
      if (j == l) w += prob.col(j);
      h.block(j * n, l * n, n, n) = k * (w / n).asDiagonal() * k;
      if (j == l) h.block(j * n, l * n, n, n) += lambda * k;
    }
  return h;
}

}  // namespace

TEST_CASE("ridge solution matches the two-point closed form") {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  Eigen::VectorXd y(2);
  y << 1.0, -1.0;
  const double lambda = 0.05;
  const KernelMatrix km = rbf_kernel_matrix(x, KernelConfig{1.0});
  const ModelParams model = train_krr(km, y, lambda);

  // (K + 2 lambda I) alpha = y with K = [[1, e], [e, 1]], e = exp(-1/2)
  const double e = std::exp(-0.5);
  const double a = 1.0 + 2.0 * lambda;
  const double det = a * a - e * e;
  CHECK(model.alpha(0, 0) == doctest::Approx((a * y[0] - e * y[1]) / det).epsilon(1e-12));
  CHECK(model.alpha(1, 0) == doctest::Approx((a * y[1] - e * y[0]) / det).epsilon(1e-12));
  CHECK(model.converged);
  CHECK(model.newton_iterations == 0);
  CHECK(model.kkt_residual <= 1e-8 * 2.0);
}

TEST_CASE("stronger regularization shrinks predictions monotonically") {
  const Eigen::MatrixXd x = random_x(21, 12, 2);
  Eigen::VectorXd y(12);
  CounterRng rng(22, 0);
  for (int i = 0; i < 12; ++i) y[i] = rng.normal();
  const KernelMatrix km = rbf_kernel_matrix(x, KernelConfig{1.0});
  double prev = std::numeric_limits<double>::infinity();
  for (double lambda : {0.01, 0.1, 1.0, 10.0}) {
    const ModelParams model = train_krr(km, y, lambda);
    const double norm = predict_krr(km.k, model).norm();
    CHECK(norm < prev);
    prev = norm;
  }
}

TEST_CASE("nonpositive ridge weights are rejected") {
  const KernelMatrix km = rbf_kernel_matrix(random_x(23, 4, 2), KernelConfig{1.0});
  CHECK_THROWS_AS(train_krr(km, Eigen::VectorXd::Zero(4), 0.0), std::invalid_argument);
  CHECK_THROWS_AS(train_klr_weighted(km, Eigen::MatrixXd::Constant(4, 2, 0.5), -1.0),
                  std::invalid_argument);
}

TEST_CASE("uniform weights make zero coefficients stationary") {
  const KernelMatrix km = rbf_kernel_matrix(random_x(24, 10, 2), KernelConfig{1.0});
  const Eigen::MatrixXd w = Eigen::MatrixXd::Constant(10, 3, 1.0 / 3.0);
  const ModelParams model = train_klr_weighted(km, w, 0.1);
  CHECK(model.alpha.cwiseAbs().maxCoeff() == 0.0);
  CHECK(model.newton_iterations == 0);
  CHECK(model.converged);
}

TEST_CASE("weighted training reaches stationarity on one-hot labels") {
  const Eigen::MatrixXd x = random_x(25, 14, 2);
  Eigen::VectorXi labels(14);
  CounterRng rng(26, 0);
  for (int i = 0; i < 14; ++i) labels[i] = rng.uniform_int(3);
  const KernelMatrix km = rbf_kernel_matrix(x, KernelConfig{1.0});
  const Eigen::MatrixXd w = one_hot(labels, 3);
  const ModelParams model = train_klr_weighted(km, w, 0.05, 100, 1e-10);
  CHECK(model.converged);
  CHECK(klr_gradient(km, w, 0.05, model.alpha).cwiseAbs().maxCoeff() <= 1e-10);
  // training moved the objective below the zero start
  CHECK(klr_objective(km, w, 0.05, model.alpha) <
        klr_objective(km, w, 0.05, Eigen::MatrixXd::Zero(14, 3)));
}

TEST_CASE("klr gradient matches finite differences of its objective") {
  const KernelMatrix km = rbf_kernel_matrix(random_x(27, 6, 2), KernelConfig{1.2});
  CounterRng rng(28, 0);
  Eigen::MatrixXd w(6, 2), alpha(6, 2);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) {
      w(i, j) = rng.next_double();
      alpha(i, j) = 0.3 * rng.normal();
    }
  const Eigen::MatrixXd grad = klr_gradient(km, w, 0.07, alpha);
  const double h = 1e-6;
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) {
      Eigen::MatrixXd ap = alpha, am = alpha;
      ap(i, j) += h;
      am(i, j) -= h;
      const double fd =
          (klr_objective(km, w, 0.07, ap) - klr_objective(km, w, 0.07, am)) / (2 * h);
      CHECK(grad(i, j) == doctest::Approx(fd).epsilon(1e-6));
    }
}

TEST_CASE("curvature assembly agrees with the all-blocks formula") {
  for (int k = 2; k <= 4; ++k) {
    const int n = 7;
    const KernelMatrix km = rbf_kernel_matrix(random_x(29 + k, n, 2), KernelConfig{1.0});
    CounterRng rng(33 + k, 0);
    Eigen::MatrixXd z(n, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < k; ++j) z(i, j) = rng.normal();
    Eigen::MatrixXd prob(n, k);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd e = (z.row(i).array() - z.row(i).maxCoeff()).exp();
      prob.row(i) = e.transpose() / e.sum();
    }
    const Eigen::MatrixXd fast = klr_hessian(km.k, prob, 0.08);
    const Eigen::MatrixXd slow = naive_klr_hessian(km.k, prob, 0.08);
    CHECK((fast - slow).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((fast - fast.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
  }
  CHECK_THROWS_AS(klr_hessian(Eigen::MatrixXd::Identity(3, 3),
                              Eigen::MatrixXd::Ones(3, 1), 0.1),
                  std::invalid_argument);
}

TEST_CASE("psd_llt leaves well-posed systems unshifted and reports the shift otherwise") {
  const KernelMatrix km = rbf_kernel_matrix(random_x(40, 8, 2), KernelConfig{1.0});
  Eigen::MatrixXd pd = km.k;
  pd.diagonal().array() += 0.5;
  double jitter = -1.0;
  const Eigen::LLT<Eigen::MatrixXd> llt = psd_llt(pd, &jitter);
  CHECK(jitter == 0.0);
  const Eigen::VectorXd b = Eigen::VectorXd::Ones(8);
  CHECK((pd * llt.solve(b) - b).cwiseAbs().maxCoeff() <= 1e-10);

  // rank-one matrix rounds to semidefinite; the factorization must still hold
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(6, 1.0, 2.0);
  Eigen::MatrixXd rank1 = v * v.transpose();
  CHECK_NOTHROW(psd_llt(rank1, &jitter));
  CHECK(jitter >= 0.0);

  CHECK_THROWS_AS(psd_llt(-Eigen::MatrixXd::Identity(4, 4)), std::runtime_error);
}

TEST_CASE("cross validation is deterministic and orders grids canonically") {
  const Eigen::MatrixXd x = random_x(41, 30, 1);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) y[i] = std::sin(x(i, 0));
  const Dataset data = make_regression_dataset(x, y);

  const CvResult a = cross_validate(data, {0.1, 0.001}, {0.5, 1.5}, 5, 9);
  const CvResult b = cross_validate(data, {0.001, 0.1}, {1.5, 0.5}, 5, 9);
  CHECK(a.best.lambda == b.best.lambda);
  CHECK(a.best.kernel.sigma == b.best.kernel.sigma);
  CHECK(a.mean_loss == b.mean_loss);
  REQUIRE(a.mean_loss.size() == 4);
  CHECK(a.lambda_grid == std::vector<double>{0.001, 0.1});
  CHECK(a.sigma_grid == std::vector<double>{0.5, 1.5});

  const CvResult c = cross_validate(data, {0.1, 0.001}, {0.5, 1.5}, 5, 10);
  CHECK(c.mean_loss.size() == 4);  // a different seed still covers the grid
}

TEST_CASE("cross validation rejects undersized folds and empty grids") {
  const Dataset data =
      make_regression_dataset(random_x(42, 6, 1), Eigen::VectorXd::Zero(6));
  CHECK_THROWS_AS(cross_validate(data, {0.1}, {1.0}, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(cross_validate(data, {0.1}, {1.0}, 7, 0), std::invalid_argument);
  CHECK_THROWS_AS(cross_validate(data, {}, {1.0}, 3, 0), std::invalid_argument);
}
