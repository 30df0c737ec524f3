#include "duti/debug_classification.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace duti {

namespace {

Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& z, Eigen::VectorXd* lse = nullptr) {
  Eigen::VectorXd zmax = z.rowwise().maxCoeff();
  Eigen::MatrixXd p = (z.colwise() - zmax).array().exp();
  Eigen::VectorXd norm = p.rowwise().sum();
  if (lse) *lse = norm.array().log() + zmax.array();
  p.array().colwise() /= norm.array();
  return p;
}

Eigen::Map<const Eigen::VectorXd> as_vec(const Eigen::MatrixXd& m) {
  return Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
}

}  // namespace

ClsDebugProblem make_cls_problem(const Dataset& data, const TrustedSet& trusted,
                                 const LearnerConfig& config) {
  if (data.task != Task::kClassification)
    throw std::invalid_argument("make_cls_problem: classification data required");
  validate(data);
  validate_trusted(trusted, data);
  ClsDebugProblem p;
  p.km = rbf_kernel_matrix(data.x, config.kernel);
  p.k_trust = rbf_kernel(trusted.x, data.x, config.kernel.sigma);
  p.y = data.labels;
  p.y_hot = one_hot(data.labels, data.num_classes);
  p.y_trust = trusted.labels;
  p.confidence = trusted.confidence;
  p.lambda = config.lambda;
  p.n = data.n();
  p.m = trusted.m();
  p.k = data.num_classes;
  p.newton_max_iter = config.newton_max_iter;
  p.newton_tol = config.newton_tol;
  return p;
}

ModelParams retrain(const ClsDebugProblem& p, const Eigen::MatrixXd& delta,
                    const Eigen::MatrixXd* alpha0) {
  return train_klr_weighted(p.km, delta, p.lambda, p.newton_max_iter, p.newton_tol, alpha0);
}

double classification_objective_at(const ClsDebugProblem& p, double gamma,
                                   const Eigen::MatrixXd& delta,
                                   const Eigen::MatrixXd& alpha) {
  const Eigen::MatrixXd zt = p.k_trust * alpha;
  Eigen::VectorXd lse_t;
  row_softmax(zt, &lse_t);
  double trust = 0.0;
  for (int i = 0; i < p.m; ++i)
    trust += p.confidence[i] * (lse_t[i] - zt(i, p.y_trust[i]));
  trust /= p.m;

  const Eigen::MatrixXd z = p.km.k * alpha;
  Eigen::VectorXd lse;
  row_softmax(z, &lse);
  // log-partition weighted by the row sum keeps the form differentiable off
  // the simplex
  const double self =
      (delta.rowwise().sum().dot(lse) - (delta.array() * z.array()).sum()) / p.n;

  double keep = 0.0;
  for (int i = 0; i < p.n; ++i) keep += 1.0 - delta(i, p.y[i]);
  return trust + self + gamma / p.n * keep;
}

double classification_objective(const ClsDebugProblem& p, double gamma,
                                const Eigen::MatrixXd& delta) {
  const ModelParams model = retrain(p, delta);
  return classification_objective_at(p, gamma, delta, model.alpha);
}

KktLinearization kkt_linearize(const ClsDebugProblem& p, const Eigen::MatrixXd& delta,
                               const Eigen::MatrixXd& alpha) {
  const Eigen::MatrixXd z = p.km.k * alpha;
  const Eigen::MatrixXd prob = row_softmax(z);

  KktLinearization lin;
  lin.residual = p.km.k * ((prob - delta) / p.n + p.lambda * alpha);
  lin.h_llt = psd_llt(klr_hessian(p.km.k, prob, p.lambda));
  lin.h_min_diag = lin.h_llt.matrixLLT().diagonal().minCoeff();
  return lin;
}

Eigen::MatrixXd apply_alpha_jacobian(const ClsDebugProblem& p, const KktLinearization& lin,
                                     const Eigen::MatrixXd& d_delta) {
  Eigen::MatrixXd rhs = p.km.k * d_delta / p.n;
  Eigen::VectorXd sol = lin.h_llt.solve(Eigen::VectorXd(as_vec(rhs)));
  return Eigen::Map<const Eigen::MatrixXd>(sol.data(), p.n, p.k);
}

ClassificationHypergradient classification_hypergradient_parts(
    const ClsDebugProblem& p, double gamma, const Eigen::MatrixXd& delta,
    const Eigen::MatrixXd& alpha, const KktLinearization& lin) {
  const int n = p.n;
  const int k = p.k;

  // theta-gradient of the confidence-weighted mean trusted loss
  const Eigen::MatrixXd zt = p.k_trust * alpha;
  Eigen::MatrixXd pt = row_softmax(zt);
  for (int i = 0; i < p.m; ++i) pt(i, p.y_trust[i]) -= 1.0;
  const Eigen::MatrixXd v_trust =
      p.k_trust.transpose() * (p.confidence.asDiagonal() * pt) / p.m;

  // theta-gradient of the delta-weighted self loss
  const Eigen::MatrixXd z = p.km.k * alpha;
  const Eigen::MatrixXd prob = row_softmax(z);
  Eigen::MatrixXd mixed = delta.rowwise().sum().asDiagonal() * prob - delta;
  const Eigen::MatrixXd v_self = p.km.k * mixed / n;

  // one adjoint solve per aggregate, then contraction with dg/d delta
  auto pull_back = [&](const Eigen::MatrixXd& v) {
    Eigen::VectorXd u = lin.h_llt.solve(Eigen::VectorXd(as_vec(v)));
    Eigen::Map<const Eigen::MatrixXd> um(u.data(), n, k);
    return Eigen::MatrixXd(p.km.k * um / n);
  };

  ClassificationHypergradient out;
  out.trusted_term = pull_back(v_trust);
  out.self_term = pull_back(v_self);

  Eigen::VectorXd lse;
  row_softmax(z, &lse);
  out.direct_term = (lse.replicate(1, k) - z) / n;

  out.sparsity_term = Eigen::MatrixXd::Zero(n, k);
  for (int i = 0; i < n; ++i) out.sparsity_term(i, p.y[i]) = -gamma / n;

  out.total = out.trusted_term + out.direct_term + out.self_term + out.sparsity_term;
  return out;
}

Eigen::MatrixXd classification_hypergradient(const ClsDebugProblem& p, double gamma,
                                             const Eigen::MatrixXd& delta,
                                             const Eigen::MatrixXd& alpha,
                                             const KktLinearization& lin) {
  return classification_hypergradient_parts(p, gamma, delta, alpha, lin).total;
}

Eigen::VectorXd simplex_project(const Eigen::VectorXd& v) {
  const int k = static_cast<int>(v.size());
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cum = 0.0;
  double tau = 0.0;
  for (int j = 0; j < k; ++j) {
    cum += u[j];
    const double cand = (cum - 1.0) / (j + 1);
    if (u[j] - cand > 0.0) tau = cand;
  }
  return (v.array() - tau).max(0.0);
}

Eigen::MatrixXd simplex_project_rows(const Eigen::MatrixXd& v) {
  Eigen::MatrixXd out(v.rows(), v.cols());
  for (Eigen::Index i = 0; i < v.rows(); ++i)
    out.row(i) = simplex_project(v.row(i).transpose()).transpose();
  return out;
}

PgdResult projected_gradient_descent(const ClsDebugProblem& p, double gamma,
                                     const Eigen::MatrixXd& delta_init,
                                     const ModelParams* warm_model, const PgdOptions& opts) {
  if (delta_init.rows() != p.n || delta_init.cols() != p.k)
    throw std::invalid_argument("projected_gradient_descent: delta shape mismatch");

  Eigen::MatrixXd delta = delta_init;
  ModelParams model = retrain(p, delta, warm_model && !opts.cold_start_inner
                                            ? &warm_model->alpha
                                            : nullptr);
  int newton_total = model.newton_iterations;
  double f = classification_objective_at(p, gamma, delta, model.alpha);
  const double f_start = f;

  PgdResult out;
  bool converged = false;
  int it = 0;
  const double c = 1e-4;

  for (; it < opts.max_iter; ++it) {
    const KktLinearization lin = kkt_linearize(p, delta, model.alpha);
    const Eigen::MatrixXd grad =
        classification_hypergradient(p, gamma, delta, model.alpha, lin);

    // composite gradient mapping at unit step
    const Eigen::MatrixXd mapped = simplex_project_rows(delta - grad);
    if ((mapped - delta).cwiseAbs().maxCoeff() < opts.grad_tol) {
      converged = true;
      break;
    }

    double step = 1.0;
    bool accepted = false;
    Eigen::MatrixXd trial, alpha_lin;
    double ftrial = 0.0;
    while (step >= 1e-12) {
      trial = simplex_project_rows(delta - step * grad);
      const Eigen::MatrixXd d = trial - delta;
      const double decrease = (grad.array() * d.array()).sum();
      alpha_lin = model.alpha + apply_alpha_jacobian(p, lin, d);
      const double flin = classification_objective_at(p, gamma, trial, alpha_lin);
      if (flin <= f + c * decrease) {
        ModelParams trial_model =
            retrain(p, trial, opts.cold_start_inner ? nullptr : &alpha_lin);
        newton_total += trial_model.newton_iterations;
        ftrial = classification_objective_at(p, gamma, trial, trial_model.alpha);
        if (ftrial <= f + 1e-12 * std::max(1.0, std::abs(f))) {
          model = std::move(trial_model);
          accepted = true;
          break;
        }
      }
      step *= 0.5;
    }
    if (!accepted) {
      converged = true;  // no feasible descent step: stationary to working precision
      break;
    }

    const double move = (trial - delta).cwiseAbs().maxCoeff();
    delta = trial;
    f = ftrial;
    if (move < opts.step_tol) {
      converged = true;
      ++it;
      break;
    }
  }

  // Hitting the iteration cap while still driving the objective down is a
  // normal terminus of the continuation round (the next round refines from
  // here); only a cap with no measurable progress is a failure.
  if (!converged && it >= opts.max_iter)
    converged = f_start - f > 1e-10 * std::max(1.0, std::abs(f_start));

  out.delta = delta;
  out.model = model;
  out.converged = converged;
  out.iterations = it;
  out.newton_iterations = newton_total;
  out.objective = f;
  return out;
}

}  // namespace duti
