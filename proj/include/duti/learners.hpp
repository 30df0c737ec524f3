#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "duti/kernel.hpp"
#include "duti/types.hpp"

namespace duti {

struct LearnerConfig {
  double lambda = 1e-3;  // ridge weight, > 0
  KernelConfig kernel;
  int newton_max_iter = 100;
  double newton_tol = 1e-8;  // max-norm stationarity stop
};

// alpha = (K + n lambda I)^{-1} y via Cholesky. Throws std::runtime_error on
// factorization failure; enforces a residual bound of 1e-8 * (1 + |y|_inf)
// after one refinement pass.
ModelParams train_krr(const KernelMatrix& km, const Eigen::VectorXd& y, double lambda);

// Cholesky for matrices that are positive definite in exact arithmetic but may
// round to semidefinite (kernel spectra decay below machine epsilon). Retries
// with an escalating diagonal shift, scale-relative, up to 1e-6; throws
// std::runtime_error past that. jitter_used reports the accepted shift.
Eigen::LLT<Eigen::MatrixXd> psd_llt(const Eigen::MatrixXd& h, double* jitter_used = nullptr);

// k_cross is t x n with rows k(x_new_i, x_train_j).
Eigen::VectorXd predict_krr(const Eigen::MatrixXd& k_cross, const ModelParams& model);

// Curvature of the weighted objective at class probabilities prob, an
// (nk) x (nk) matrix over the column-major n x k layout. Block (j,l) is
// K diag(w) K / n + delta_jl lambda K with w = delta_jl p_j - p_j p_l; the
// weight grid has vanishing row sums because prob rows sum to one, so blocks
// touching the last class are negated sums of the earlier blocks in their row
// and only the leading (k-1) x (k-1) blocks cost a matrix product.
Eigen::MatrixXd klr_hessian(const Eigen::MatrixXd& k, const Eigen::MatrixXd& prob,
                            double lambda);

// Weighted kernel logistic regression by damped Newton. Minimizes
//   -(1/n) sum_ij w_ij K_i^T a_j + (1/n) sum_i lse(K_i^T a) + (l/2) sum_j a_j^T K a_j.
// Rows of w need not be one-hot or sum to one. alpha0 warm-starts the solve.
// Armijo backtracking with c = 1e-4; throws std::runtime_error when the
// Hessian factorization fails (regularization too small for this kernel).
ModelParams train_klr_weighted(const KernelMatrix& km, const Eigen::MatrixXd& w,
                               double lambda, int max_iter = 100, double tol = 1e-8,
                               const Eigen::MatrixXd* alpha0 = nullptr);

double klr_objective(const KernelMatrix& km, const Eigen::MatrixXd& w, double lambda,
                     const Eigen::MatrixXd& alpha);

// Stationarity map g(w, alpha) of the weighted objective, n x k.
Eigen::MatrixXd klr_gradient(const KernelMatrix& km, const Eigen::MatrixXd& w,
                             double lambda, const Eigen::MatrixXd& alpha);

// Row-stochastic class probabilities, log-sum-exp stabilized.
Eigen::MatrixXd predict_klr(const Eigen::MatrixXd& k_cross, const ModelParams& model);

struct CvResult {
  LearnerConfig best;
  // mean held-out loss per (lambda, sigma) pair, lambda-major order
  std::vector<double> mean_loss;
  std::vector<double> lambda_grid;
  std::vector<double> sigma_grid;
};

extern const std::vector<double> kDefaultLambdaGrid;   // 1e-4 .. 1e1
extern const std::vector<double> kDefaultSigmaFactors; // 1/4 .. 4 times median

// K-fold selection of (lambda, sigma). Loss: mean squared error (regression),
// mean negative log-likelihood (classification). Ties break toward larger
// lambda, then larger sigma. Fold assignment is a seeded shuffle; n >= folds.
CvResult cross_validate(const Dataset& data, std::vector<double> lambda_grid,
                        std::vector<double> sigma_grid, int folds = 10,
                        std::uint64_t seed = 0);
CvResult cross_validate(const Dataset& data, int folds = 10, std::uint64_t seed = 0);

}  // namespace duti
