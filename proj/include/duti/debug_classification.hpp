#pragma once

#include <Eigen/Dense>

#include "duti/learners.hpp"
#include "duti/types.hpp"

namespace duti {

// Fixed inputs of a classification debug run, with kernels precomputed.
struct ClsDebugProblem {
  KernelMatrix km;          // n x n training kernel
  Eigen::MatrixXd k_trust;  // m x n cross kernel, trusted rows
  Eigen::VectorXi y;        // original labels
  Eigen::MatrixXd y_hot;    // one_hot(y)
  Eigen::VectorXi y_trust;
  Eigen::VectorXd confidence;
  double lambda = 0.0;
  int n = 0;
  int m = 0;
  int k = 0;
  int newton_max_iter = 100;
  double newton_tol = 1e-8;
};

ClsDebugProblem make_cls_problem(const Dataset& data, const TrustedSet& trusted,
                                 const LearnerConfig& config);

// Trains the weighted learner at delta (alpha0 warm-starts the Newton solve).
ModelParams retrain(const ClsDebugProblem& p, const Eigen::MatrixXd& delta,
                    const Eigen::MatrixXd* alpha0 = nullptr);

// Outer objective with the inner solution substituted:
//   (1/m) sum_i c_i loss(xt_i, yt_i, alpha)
// + (1/n) sum_ij delta_ij loss(x_i, j, alpha)
// + (gamma/n) sum_i (1 - delta_{i,y_i}).
// The middle sum weights the log-partition by the row sum of delta, so the
// expression stays differentiable off the simplex (finite-difference probes).
double classification_objective_at(const ClsDebugProblem& p, double gamma,
                                   const Eigen::MatrixXd& delta,
                                   const Eigen::MatrixXd& alpha);

// Retrains, then evaluates.
double classification_objective(const ClsDebugProblem& p, double gamma,
                                const Eigen::MatrixXd& delta);

// Stationarity map of the inner learner at (delta, alpha) and its factorized
// alpha-derivative. h is (nk) x (nk), column-major over the n x k layout.
struct KktLinearization {
  Eigen::MatrixXd residual;  // g(delta, alpha), n x k
  Eigen::LLT<Eigen::MatrixXd> h_llt;
  double h_min_diag = 0.0;  // smallest Cholesky pivot observed
};

KktLinearization kkt_linearize(const ClsDebugProblem& p, const Eigen::MatrixXd& delta,
                               const Eigen::MatrixXd& alpha);

// J applied to a perturbation of delta: d alpha = H^{-1} ((1/n) K d delta).
Eigen::MatrixXd apply_alpha_jacobian(const ClsDebugProblem& p, const KktLinearization& lin,
                                     const Eigen::MatrixXd& d_delta);

struct ClassificationHypergradient {
  Eigen::MatrixXd total;          // n x k
  Eigen::MatrixXd trusted_term;   // adjoint of the trusted loss
  Eigen::MatrixXd direct_term;    // (1/n) loss(x_i, j, alpha)
  Eigen::MatrixXd self_term;      // adjoint of the delta-weighted self loss
  Eigen::MatrixXd sparsity_term;  // -(gamma/n) on (i, y_i)
};

// Adjoint evaluation: one H-solve against the aggregated theta-gradients, then
// contraction with dg/d delta.
ClassificationHypergradient classification_hypergradient_parts(
    const ClsDebugProblem& p, double gamma, const Eigen::MatrixXd& delta,
    const Eigen::MatrixXd& alpha, const KktLinearization& lin);

Eigen::MatrixXd classification_hypergradient(const ClsDebugProblem& p, double gamma,
                                             const Eigen::MatrixXd& delta,
                                             const Eigen::MatrixXd& alpha,
                                             const KktLinearization& lin);

// Euclidean projection onto the probability simplex (sort-based).
Eigen::VectorXd simplex_project(const Eigen::VectorXd& v);
Eigen::MatrixXd simplex_project_rows(const Eigen::MatrixXd& v);

struct PgdOptions {
  int max_iter = 500;
  double step_tol = 1e-6;   // stop on |delta change|_inf below this
  double grad_tol = 1e-6;   // stop on projected-gradient max-norm below this
  bool cold_start_inner = false;  // disable linearized warm starts (diagnostics)
};

struct PgdResult {
  Eigen::MatrixXd delta;
  ModelParams model;  // trained at the returned delta
  bool converged = true;
  int iterations = 0;
  int newton_iterations = 0;  // total inner Newton steps consumed
  double objective = 0.0;
};

// Projected gradient descent on the outer objective. Backtracking line search
// from step 1.0; trial points are scored with the linearized inner solution
// alpha + J (delta_trial - delta), and each accepted step retrains once with
// that linearization as warm start. Steps that fail to decrease the true
// objective after retraining are rejected and the step halved. Termination:
// delta-change or projected-gradient max-norm below tolerance, or the
// iteration cap. A capped run still counts as converged while the objective
// is decreasing; converged = false means the iterate stalled away from
// stationarity.
PgdResult projected_gradient_descent(const ClsDebugProblem& p, double gamma,
                                     const Eigen::MatrixXd& delta_init,
                                     const ModelParams* warm_model = nullptr,
                                     const PgdOptions& opts = {});

}  // namespace duti
