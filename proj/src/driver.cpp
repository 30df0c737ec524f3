#include "duti/driver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace duti {

double initial_gamma(const Dataset& data, const TrustedSet& trusted,
                     const LearnerConfig& config) {
  if (data.task == Task::kRegression) {
    const Eigen::VectorXd g = regression_hypergradient(
        data, trusted, config, 0.0, Eigen::VectorXd::Zero(data.n()));
    return g.cwiseAbs().maxCoeff();
  }
  const ClsDebugProblem p = make_cls_problem(data, trusted, config);
  const Eigen::MatrixXd delta = p.y_hot;
  const ModelParams model = retrain(p, delta);
  const KktLinearization lin = kkt_linearize(p, delta, model.alpha);
  const Eigen::MatrixXd g = classification_hypergradient(p, 0.0, delta, model.alpha, lin);
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < p.n; ++i) best = std::max(best, g(i, p.y[i]));
  return best;
}

LassoResult solve_regression_round(const LassoSystem& sys, double gamma,
                                   const Eigen::VectorXd& init) {
  // driver gammas are per-coordinate thresholds; the solver's sparsity term
  // carries a 1/n
  return solve_weighted_lasso(sys, gamma * sys.n, init);
}

PgdResult solve_classification_round(const ClsDebugProblem& p, double gamma,
                                     const Eigen::MatrixXd& delta_init,
                                     const ModelParams* warm_model, const PgdOptions& opts) {
  return projected_gradient_descent(p, gamma * p.n, delta_init, warm_model, opts);
}

std::vector<int> extract_flags(Task task, const Eigen::MatrixXd& delta,
                               const Eigen::VectorXi& labels) {
  std::vector<int> flags;
  if (task == Task::kRegression) {
    for (Eigen::Index i = 0; i < delta.rows(); ++i)
      if (std::abs(delta(i, 0)) > kRegressionFlagTol) flags.push_back(static_cast<int>(i));
    return flags;
  }
  for (Eigen::Index i = 0; i < delta.rows(); ++i) {
    Eigen::Index arg = 0;
    delta.row(i).maxCoeff(&arg);
    if (static_cast<int>(arg) != labels[static_cast<int>(i)])
      flags.push_back(static_cast<int>(i));
  }
  return flags;
}

std::vector<RankedFlag> rank_flags(const std::vector<RoundRecord>& trajectory,
                                   const Dataset& data) {
  std::map<int, RankedFlag> found;  // index -> entry being built
  for (const RoundRecord& round : trajectory) {
    if (!round.converged) continue;
    for (int i : round.flags) {
      const bool fresh = found.find(i) == found.end();
      RankedFlag& item = found[i];
      if (fresh) {
        item.index = i;
        item.first_round = round.t;
        item.deviation = data.task == Task::kRegression
                             ? std::abs(round.delta(i, 0))
                             : 1.0 - round.delta(i, data.labels[i]);
      }
      // fix comes from the last round that still flagged the item
      if (data.task == Task::kRegression) {
        item.fix_value = data.y[i] + round.delta(i, 0);
      } else {
        Eigen::Index arg = 0;
        round.delta.row(i).maxCoeff(&arg);
        item.fix_label = static_cast<int>(arg);
      }
    }
  }
  std::vector<RankedFlag> ranking;
  ranking.reserve(found.size());
  for (auto& [i, item] : found) ranking.push_back(item);
  std::sort(ranking.begin(), ranking.end(), [](const RankedFlag& a, const RankedFlag& b) {
    if (a.first_round != b.first_round) return a.first_round < b.first_round;
    if (a.deviation != b.deviation) return a.deviation > b.deviation;
    return a.index < b.index;
  });
  return ranking;
}

DebugReport run_duti(const Dataset& data, const TrustedSet& trusted,
                     const DriverConfig& config) {
  validate(data);
  validate_trusted(trusted, data);
  if (config.budget < 0) throw std::invalid_argument("run_duti: negative budget");
  if (config.max_rounds < 1) throw std::invalid_argument("run_duti: max_rounds must be positive");

  DebugReport report;
  report.task = data.task;
  report.n = data.n();
  report.k = data.num_classes;
  report.budget = config.budget;
  report.lambda = config.learner.lambda;
  report.sigma = config.learner.kernel.sigma;
  report.seed = config.seed;

  const double gamma0 =
      config.gamma0 > 0.0 ? config.gamma0 : initial_gamma(data, trusted, config.learner);
  report.gamma0 = gamma0;
  if (!(gamma0 > 0.0)) return report;  // nothing pulls on any label

  const double floor = config.gamma_floor > 0.0 ? config.gamma_floor : std::ldexp(gamma0, -30);

  std::vector<bool> flagged(data.n(), false);
  int n_flag = 0;

  if (data.task == Task::kRegression) {
    const LassoSystem sys = build_lasso_system(data, trusted, config.learner);
    Eigen::VectorXd delta = Eigen::VectorXd::Zero(data.n());
    for (int t = 1; n_flag <= config.budget && t <= config.max_rounds; ++t) {
      const double gamma = std::ldexp(gamma0, -t);
      if (gamma < floor) break;
      const LassoResult res = solve_regression_round(sys, gamma, delta);
      delta = res.delta;
      RoundRecord round;
      round.t = t;
      round.gamma = gamma;
      round.converged = res.converged;
      round.delta = delta;
      if (res.converged) {
        round.flags = extract_flags(Task::kRegression, round.delta, data.labels);
        for (int i : round.flags)
          if (!flagged[i]) {
            flagged[i] = true;
            ++n_flag;
          }
      } else {
        report.all_rounds_converged = false;
      }
      report.trajectory.push_back(std::move(round));
    }
  } else {
    const ClsDebugProblem problem = make_cls_problem(data, trusted, config.learner);
    Eigen::MatrixXd delta = problem.y_hot;
    ModelParams model = retrain(problem, delta);
    for (int t = 1; n_flag <= config.budget && t <= config.max_rounds; ++t) {
      const double gamma = std::ldexp(gamma0, -t);
      if (gamma < floor) break;
      const PgdResult res = solve_classification_round(problem, gamma, delta, &model);
      delta = res.delta;
      model = res.model;
      RoundRecord round;
      round.t = t;
      round.gamma = gamma;
      round.converged = res.converged;
      round.delta = delta;
      if (res.converged) {
        round.flags = extract_flags(Task::kClassification, round.delta, data.labels);
        for (int i : round.flags)
          if (!flagged[i]) {
            flagged[i] = true;
            ++n_flag;
          }
      } else {
        report.all_rounds_converged = false;
      }
      report.trajectory.push_back(std::move(round));
    }
  }

  report.ranking = rank_flags(report.trajectory, data);
  return report;
}

}  // namespace duti
