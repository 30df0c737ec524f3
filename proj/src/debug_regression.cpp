#include "duti/debug_regression.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace duti {

namespace {

Eigen::VectorXd soft_threshold(const Eigen::VectorXd& v, double t) {
  return v.array().sign() * (v.array().abs() - t).max(0.0);
}

double l1(const Eigen::VectorXd& v) { return v.cwiseAbs().sum(); }

// Largest eigenvalue of (2 wm^T wm) by power iteration; spectral bound for the
// smooth part's curvature.
double curvature_estimate(const Eigen::MatrixXd& wm) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(wm.cols()).normalized();
  double lam = 1.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd next = wm.transpose() * (wm * v);
    const double nn = next.norm();
    if (nn == 0.0) return 2.0;
    lam = nn;
    v = next / nn;
  }
  return 2.0 * lam;
}

}  // namespace

LassoSystem build_lasso_system(const Dataset& data, const TrustedSet& trusted,
                               const LearnerConfig& config) {
  if (data.task != Task::kRegression)
    throw std::invalid_argument("build_lasso_system: regression data required");
  validate(data);
  validate_trusted(trusted, data);
  const int n = data.n();
  const int m = trusted.m();

  const KernelMatrix km = rbf_kernel_matrix(data.x, config.kernel);
  const Eigen::MatrixXd kt = rbf_kernel(trusted.x, data.x, config.kernel.sigma);

  Eigen::MatrixXd reg = km.k;
  reg.diagonal().array() += n * config.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("build_lasso_system: kernel system is not positive definite");

  LassoSystem sys;
  sys.n = n;
  sys.m = m;
  sys.a = llt.solve(kt.transpose()).transpose();          // Kt (K + n l I)^{-1}
  sys.b = llt.solve(km.k).transpose();                    // K (K + n l I)^{-1}
  sys.b.diagonal().array() -= 1.0;
  sys.cw.resize(m + n);
  sys.cw.head(m) = (trusted.confidence.array() / m).sqrt();
  sys.cw.tail(n).setConstant(1.0 / std::sqrt(static_cast<double>(n)));
  sys.target.resize(m + n);
  sys.target.head(m) = trusted.y - sys.a * data.y;
  sys.target.tail(n) = -(sys.b * data.y);

  sys.wm.resize(m + n, n);
  sys.wm.topRows(m) = sys.cw.head(m).asDiagonal() * sys.a;
  sys.wm.bottomRows(n) = sys.cw.tail(n).asDiagonal() * sys.b;
  sys.wtarget = sys.cw.cwiseProduct(sys.target);
  return sys;
}

double lasso_objective(const LassoSystem& sys, double gamma, const Eigen::VectorXd& delta) {
  return (sys.wm * delta - sys.wtarget).squaredNorm() + gamma / sys.n * l1(delta);
}

double lasso_optimality_residual(const LassoSystem& sys, double gamma,
                                 const Eigen::VectorXd& delta) {
  const Eigen::VectorXd grad = 2.0 * (sys.wm.transpose() * (sys.wm * delta - sys.wtarget));
  const double tau = gamma / sys.n;
  double worst = 0.0;
  for (int i = 0; i < sys.n; ++i) {
    const double v = delta[i] == 0.0 ? std::max(std::abs(grad[i]) - tau, 0.0)
                                     : std::abs(grad[i] + (delta[i] > 0 ? tau : -tau));
    worst = std::max(worst, v);
  }
  return worst;
}

LassoResult solve_weighted_lasso(const LassoSystem& sys, double gamma,
                                 const Eigen::VectorXd& init) {
  if (gamma < 0.0) throw std::invalid_argument("solve_weighted_lasso: gamma must be nonnegative");
  if (init.size() != sys.n)
    throw std::invalid_argument("solve_weighted_lasso: init size does not match system");
  const double tau = gamma / sys.n;
  const int max_iter = 5000;

  Eigen::VectorXd x = init;
  Eigen::VectorXd xprev = x;
  Eigen::VectorXd y = x;
  double t = 1.0;
  double big_l = std::max(curvature_estimate(sys.wm) * 0.5, 1e-12);

  auto smooth = [&](const Eigen::VectorXd& v) { return (sys.wm * v - sys.wtarget).squaredNorm(); };
  auto full = [&](const Eigen::VectorXd& v) { return smooth(v) + tau * l1(v); };

  double f = full(x);
  int iters = 0;
  bool converged = false;
  double residual = lasso_optimality_residual(sys, gamma, x);
  if (residual < 1e-7) converged = true;

  for (; iters < max_iter && !converged; ++iters) {
    bool restarted = false;
    Eigen::VectorXd z;
    double fz = 0.0;
    for (;;) {
      const Eigen::VectorXd ry = sys.wm * y - sys.wtarget;
      const double gy = ry.squaredNorm();
      const Eigen::VectorXd grad = 2.0 * (sys.wm.transpose() * ry);
      for (;;) {
        z = soft_threshold(y - grad / big_l, tau / big_l);
        const Eigen::VectorXd d = z - y;
        const double gz = smooth(z);
        if (gz <= gy + grad.dot(d) + 0.5 * big_l * d.squaredNorm() + 1e-15) {
          fz = gz + tau * l1(z);
          break;
        }
        big_l *= 2.0;
      }
      if (fz <= f || restarted) break;
      // momentum overshot: restart from the last accepted point
      y = x;
      t = 1.0;
      restarted = true;
    }

    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    xprev = x;
    x = z;
    y = x + ((t - 1.0) / tnext) * (x - xprev);
    t = tnext;

    residual = lasso_optimality_residual(sys, gamma, x);
    const bool small_change = std::abs(f - fz) <= 1e-9 * std::max(1.0, std::abs(f));
    f = fz;
    if (residual < 1e-7 || small_change) {
      converged = true;
      break;
    }
  }

  LassoResult out;
  out.delta = x;
  out.converged = converged;
  out.iterations = iters;
  out.objective = full(x);
  out.optimality_residual = residual;
  return out;
}

RegressionHypergradient regression_hypergradient_parts(const Dataset& data,
                                                       const TrustedSet& trusted,
                                                       const LearnerConfig& config,
                                                       double gamma,
                                                       const Eigen::VectorXd& delta) {
  if (data.task != Task::kRegression)
    throw std::invalid_argument("regression_hypergradient: regression data required");
  const int n = data.n();
  const int m = trusted.m();
  if (delta.size() != n)
    throw std::invalid_argument("regression_hypergradient: delta size mismatch");

  const KernelMatrix km = rbf_kernel_matrix(data.x, config.kernel);
  const Eigen::MatrixXd kt = rbf_kernel(trusted.x, data.x, config.kernel.sigma);
  Eigen::MatrixXd reg = km.k;
  reg.diagonal().array() += n * config.lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(reg);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("regression_hypergradient: kernel system is not positive definite");

  const Eigen::VectorXd yeff = data.y + delta;
  const Eigen::VectorXd alpha = llt.solve(yeff);
  const Eigen::VectorXd r_trust = trusted.y - kt * alpha;
  const Eigen::VectorXd r_self = yeff - km.k * alpha;

  RegressionHypergradient out;
  out.trusted_term =
      llt.solve(kt.transpose() * trusted.confidence.cwiseProduct(r_trust)) * (-2.0 / m);
  out.direct_term = (2.0 / n) * r_self;
  out.self_term = llt.solve(km.k * r_self) * (-2.0 / n);
  out.sparsity_term = (gamma / n) * delta.array().sign().matrix();
  out.total = out.trusted_term + out.direct_term + out.self_term + out.sparsity_term;
  return out;
}

Eigen::VectorXd regression_hypergradient(const Dataset& data, const TrustedSet& trusted,
                                         const LearnerConfig& config, double gamma,
                                         const Eigen::VectorXd& delta) {
  return regression_hypergradient_parts(data, trusted, config, gamma, delta).total;
}

double regression_bilevel_objective(const Dataset& data, const TrustedSet& trusted,
                                    const LearnerConfig& config, double gamma,
                                    const Eigen::VectorXd& delta) {
  const int n = data.n();
  const int m = trusted.m();
  const KernelMatrix km = rbf_kernel_matrix(data.x, config.kernel);
  const Eigen::MatrixXd kt = rbf_kernel(trusted.x, data.x, config.kernel.sigma);
  const Eigen::VectorXd yeff = data.y + delta;
  const ModelParams model = train_krr(km, yeff, config.lambda);
  const Eigen::VectorXd r_trust = trusted.y - kt * model.alpha.col(0);
  const Eigen::VectorXd r_self = yeff - km.k * model.alpha.col(0);
  return trusted.confidence.cwiseProduct(r_trust).dot(r_trust) / m + r_self.squaredNorm() / n +
         gamma / n * l1(delta);
}

}  // namespace duti
