#pragma once

#include <Eigen/Dense>

#include "duti/learners.hpp"
#include "duti/types.hpp"

namespace duti {

// Collapsed convex form of the regression debugging objective:
//   |diag(cw) (M delta - target)|^2 + (gamma/n) |delta|_1,   M = [A; B],
// where A = Kt (K + n lambda I)^{-1}, B = K (K + n lambda I)^{-1} - I, the
// trusted block of cw is sqrt(c_i/m) and the self block 1/sqrt(n).
struct LassoSystem {
  Eigen::MatrixXd a;       // m x n
  Eigen::MatrixXd b;       // n x n
  Eigen::VectorXd cw;      // m + n
  Eigen::VectorXd target;  // m + n: [yt - A y; -B y]
  int n = 0;
  int m = 0;
  Eigen::MatrixXd wm;       // diag(cw) [A; B], cached design
  Eigen::VectorXd wtarget;  // diag(cw) target
};

LassoSystem build_lasso_system(const Dataset& data, const TrustedSet& trusted,
                               const LearnerConfig& config);

double lasso_objective(const LassoSystem& sys, double gamma, const Eigen::VectorXd& delta);

// Max-norm violation of the first-order conditions: |grad_i| <= gamma/n on
// inactive coordinates, grad_i = -sign(delta_i) gamma/n on active ones.
double lasso_optimality_residual(const LassoSystem& sys, double gamma,
                                 const Eigen::VectorXd& delta);

struct LassoResult {
  Eigen::VectorXd delta;
  bool converged = true;
  int iterations = 0;
  double objective = 0.0;
  double optimality_residual = 0.0;
};

// FISTA with backtracking and function-value restarts. Stops when the
// optimality residual falls below 1e-7 or the relative objective decrease
// falls below 1e-9; iteration cap 5000 returns the best iterate flagged
// non-converged.
LassoResult solve_weighted_lasso(const LassoSystem& sys, double gamma,
                                 const Eigen::VectorXd& init);

struct RegressionHypergradient {
  Eigen::VectorXd total;
  Eigen::VectorXd trusted_term;   // (1/m) sum_i c_i J^T grad_theta loss(xt_i)
  Eigen::VectorXd direct_term;    // (1/n) d loss(x_i, y_i + delta_i) / d delta_i
  Eigen::VectorXd self_term;      // (1/n) sum_i J^T grad_theta loss(x_i)
  Eigen::VectorXd sparsity_term;  // (gamma/n) sgn(delta), sgn(0) = 0
};

// Gradient of the bilevel objective with the inner ridge solution substituted,
// computed through the implicit Jacobian J = (K + n lambda I)^{-1}. Retrains
// the inner model at y + delta.
RegressionHypergradient regression_hypergradient_parts(const Dataset& data,
                                                       const TrustedSet& trusted,
                                                       const LearnerConfig& config,
                                                       double gamma,
                                                       const Eigen::VectorXd& delta);

Eigen::VectorXd regression_hypergradient(const Dataset& data, const TrustedSet& trusted,
                                         const LearnerConfig& config, double gamma,
                                         const Eigen::VectorXd& delta);

// Bilevel objective value at delta with the inner model retrained on y + delta.
double regression_bilevel_objective(const Dataset& data, const TrustedSet& trusted,
                                    const LearnerConfig& config, double gamma,
                                    const Eigen::VectorXd& delta);

}  // namespace duti
