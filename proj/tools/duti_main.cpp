// duti: label-debugging command line.
//
// Subcommands: debug (run the continuation debugger), baseline (inf/nn/lnd
// rankings), simulate (toy corpora), eval (PR and fix curves). Exit codes:
// 0 success, 1 optimizer did not converge (outputs still written), 2 bad
// input.

#include <Eigen/Core>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "duti/baselines.hpp"
#include "duti/bench.hpp"
#include "duti/driver.hpp"
#include "duti/eval.hpp"
#include "duti/io.hpp"

namespace {

using namespace duti;

struct CommonData {
  std::string train_path;
  std::string trusted_path;
  std::string task_name = "regression";
  int classes = 0;  // 0: infer from the training labels
  double lambda = 0.0;
  double sigma = 0.0;
  int folds = 10;
  std::uint64_t seed = 0;
};

void add_data_flags(CLI::App* cmd, CommonData* c) {
  cmd->add_option("--train", c->train_path, "training CSV")->required();
  cmd->add_option("--trusted", c->trusted_path, "trusted CSV")->required();
  cmd->add_option("--task", c->task_name, "regression or classification")
      ->required()
      ->check(CLI::IsMember({"regression", "classification"}));
  cmd->add_option("--classes", c->classes, "class count override (classification)");
  cmd->add_option("--lambda", c->lambda, "ridge weight; with --sigma, skips CV");
  cmd->add_option("--sigma", c->sigma, "kernel bandwidth; with --lambda, skips CV");
  cmd->add_option("--folds", c->folds, "CV folds")->default_val(10);
  cmd->add_option("--seed", c->seed, "random seed")->default_val(0);
}

Task parse_task(const std::string& s) {
  return s == "regression" ? Task::kRegression : Task::kClassification;
}

struct LoadedData {
  Dataset data;
  TrustedSet trusted;
};

LoadedData load_inputs(const CommonData& c) {
  const Task task = parse_task(c.task_name);
  Dataset data = read_train_csv(c.train_path, task);
  if (task == Task::kClassification && c.classes > 0) {
    if (c.classes < data.num_classes)
      throw std::invalid_argument("--classes below the largest training label");
    data.num_classes = c.classes;
  }
  TrustedSet trusted = read_trusted_csv(c.trusted_path, task, data.num_classes);
  validate_trusted(trusted, data);
  return {std::move(data), std::move(trusted)};
}

// Hyperparameter selection: both flags given -> use them; otherwise k-fold CV,
// with a given flag narrowing its grid axis to that single value.
LearnerConfig pick_hyperparameters(const CommonData& c, const Dataset& data) {
  if (c.lambda > 0.0 && c.sigma > 0.0) {
    LearnerConfig cfg;
    cfg.lambda = c.lambda;
    cfg.kernel.sigma = c.sigma;
    return cfg;
  }
  std::vector<double> lg = kDefaultLambdaGrid;
  std::vector<double> sg;
  if (c.lambda > 0.0) lg = {c.lambda};
  if (c.sigma > 0.0) {
    sg = {c.sigma};
  } else {
    const double med = median_heuristic_bandwidth(data.x);
    for (double f : kDefaultSigmaFactors) sg.push_back(f * med);
  }
  const CvResult cv = cross_validate(data, lg, sg, c.folds, c.seed);
  std::cerr << "cv: lambda=" << cv.best.lambda << " sigma=" << cv.best.kernel.sigma
            << "\n";
  return cv.best;
}

int cmd_debug(const CommonData& c, double gamma0, double gamma_floor, int budget,
              int max_rounds, const std::string& out_path) {
  LoadedData in = load_inputs(c);
  DriverConfig cfg;
  cfg.learner = pick_hyperparameters(c, in.data);
  cfg.budget = budget;
  cfg.gamma0 = gamma0;
  cfg.gamma_floor = gamma_floor;
  cfg.max_rounds = max_rounds;
  cfg.seed = c.seed;

  const DebugReport report = run_duti(in.data, in.trusted, cfg);
  write_report_json(out_path, report);

  std::cout << "rank,index,first_gamma,original,fix,deviation\n";
  int rank = 1;
  for (const RankedFlag& f : report.ranking) {
    std::cout << rank++ << "," << f.index << ","
              << std::ldexp(report.gamma0, -f.first_round) << ",";
    if (report.task == Task::kRegression)
      std::cout << in.data.y[f.index] << "," << f.fix_value;
    else
      std::cout << in.data.labels[f.index] << "," << f.fix_label;
    std::cout << "," << f.deviation << "\n";
  }
  std::cerr << "flags: " << report.ranking.size() << " rounds: "
            << report.trajectory.size() << " report: " << out_path << "\n";
  return report.all_rounds_converged ? 0 : 1;
}

int cmd_baseline(const CommonData& c, const std::string& method, int n_pos, int n_neg,
                 int restarts, const std::string& out_path) {
  LoadedData in = load_inputs(c);
  BaselineRanking r;
  if (method == "inf") {
    r = influence_rank(in.data, in.trusted, pick_hyperparameters(c, in.data));
  } else if (method == "nn") {
    r = nn_rank(in.data, in.trusted);
  } else {
    if (n_pos < 0 || n_neg < 0)
      throw std::invalid_argument("lnd needs --n-pos and --n-neg flip counts");
    r = lnd_oracle(in.data, in.trusted, n_pos, n_neg, c.seed, restarts);
  }
  write_baseline_json(out_path, r, method, in.data.task, in.data.n());

  std::cout << "rank,index,score,fix\n";
  for (size_t j = 0; j < r.order.size(); ++j) {
    std::cout << (j + 1) << "," << r.order[j] << "," << r.score[j] << ",";
    if (j < r.fix_value.size())
      std::cout << r.fix_value[j];
    else if (j < r.fix_label.size())
      std::cout << r.fix_label[j];
    std::cout << "\n";
  }
  std::cerr << "ranked: " << r.order.size() << " report: " << out_path << "\n";
  return 0;
}

int cmd_simulate(const std::string& generator, std::uint64_t seed, int n, int classes,
                 double noise, int credit_rows, int credit_protected,
                 const std::string& out_dir) {
  SimulatedCorpus corpus;
  if (generator == "harry-potter") {
    corpus = gen_harry_potter(seed, n);
  } else if (generator == "sine") {
    corpus = gen_sine_regression(seed, n);
  } else if (generator == "fairness") {
    Eigen::MatrixXd x;
    Eigen::VectorXi labels;
    int pcol = 0;
    make_synthetic_credit(seed, credit_rows, credit_protected, &x, &labels, &pcol);
    corpus = gen_fairness_bias(x, labels, pcol, FairnessSizes{}, seed);
  } else if (generator == "noisy-multiclass") {
    corpus = gen_noisy_relabel_multiclass(seed, classes, n, noise);
  } else {
    throw std::invalid_argument("unknown generator " + generator);
  }
  const std::string train = out_dir + "/train.csv";
  const std::string trusted = out_dir + "/trusted.csv";
  const std::string truth = out_dir + "/truth.json";
  write_train_csv(train, corpus.train);
  write_trusted_csv(trusted, corpus.trusted, corpus.train.task);
  write_truth_json(truth, corpus);
  std::cout << corpus.generator << ": n=" << corpus.train.n()
            << " trusted=" << corpus.trusted.m() << " bugs=" << corpus.bug_indices.size()
            << " -> " << train << " " << trusted << " " << truth << "\n";
  return 0;
}

int cmd_eval(const std::string& ranking_path, const std::string& truth_path,
             const std::string& pr_path, const std::string& fix_path) {
  const LoadedRanking ranking = read_ranking_json(ranking_path);
  const Truth truth = read_truth_json(truth_path);
  if (truth.task != ranking.task) throw std::invalid_argument("task mismatch");
  if (truth.n != ranking.n)
    throw std::invalid_argument("truth n=" + std::to_string(truth.n) +
                                " does not match ranking n=" + std::to_string(ranking.n));
  if (truth.bug_indices.empty()) throw std::invalid_argument("truth lists no bugs");

  write_pr_csv(pr_path, ranking.order, truth.bug_indices);
  const PrCurve curve = pr_curve(ranking.order, truth.bug_indices);
  std::cout << "pr_auc," << pr_auc(average_pr({curve})) << "\n";

  if (ranking.task == Task::kClassification && !ranking.fix_label.empty()) {
    write_fix_csv(fix_path, ranking.order, ranking.fix_label, truth.true_labels,
                  truth.bug_indices);
    std::cout << "fix_csv," << fix_path << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel-model training-label debugger"};
  app.require_subcommand(1);

  int threads = 1;
  app.add_option("--threads", threads, "internal thread cap")
      ->envname("DUTI_THREADS")
      ->default_val(1);

  CommonData dbg_data;
  double gamma0 = 0.0, gamma_floor = 0.0;
  int budget = 10, max_rounds = 40;
  std::string dbg_out = "report.json";
  CLI::App* dbg = app.add_subcommand("debug", "rank suspect training labels");
  add_data_flags(dbg, &dbg_data);
  dbg->add_option("--budget", budget, "inspection budget b")->default_val(10);
  dbg->add_option("--gamma0", gamma0, "starting gamma (default: computed)");
  dbg->add_option("--gamma-floor", gamma_floor, "stop below this gamma");
  dbg->add_option("--max-rounds", max_rounds, "halving cap")->default_val(40);
  dbg->add_option("--out", dbg_out, "report JSON path")->default_val("report.json");

  CommonData bl_data;
  std::string method;
  int n_pos = -1, n_neg = -1, restarts = 10;
  std::string bl_out = "baseline.json";
  CLI::App* bl = app.add_subcommand("baseline", "reference ranking methods");
  bl->add_option("--method", method, "inf, nn, or lnd")
      ->required()
      ->check(CLI::IsMember({"inf", "nn", "lnd"}));
  add_data_flags(bl, &bl_data);
  bl->add_option("--n-pos", n_pos, "lnd: flips among label-1 items");
  bl->add_option("--n-neg", n_neg, "lnd: flips among label-0 items");
  bl->add_option("--restarts", restarts, "lnd: local-search restarts")->default_val(10);
  bl->add_option("--out", bl_out, "ranking JSON path")->default_val("baseline.json");

  std::string generator, sim_dir = ".";
  std::uint64_t sim_seed = 0;
  int sim_n = 100, sim_classes = 3, credit_rows = 1000, credit_protected = 250;
  double sim_noise = 0.5;
  CLI::App* sim = app.add_subcommand("simulate", "generate a toy corpus");
  sim->add_option("--generator", generator, "harry-potter, sine, fairness, noisy-multiclass")
      ->required()
      ->check(CLI::IsMember({"harry-potter", "sine", "fairness", "noisy-multiclass"}));
  sim->add_option("--seed", sim_seed, "random seed")->default_val(0);
  sim->add_option("--n", sim_n, "training rows (harry-potter, sine, noisy-multiclass)")
      ->default_val(100);
  sim->add_option("--classes", sim_classes, "noisy-multiclass classes")->default_val(3);
  sim->add_option("--noise", sim_noise, "noisy-multiclass blur level")->default_val(0.5);
  sim->add_option("--rows", credit_rows, "fairness: synthetic table rows")->default_val(1000);
  sim->add_option("--protected-rows", credit_protected, "fairness: protected rows")
      ->default_val(250);
  sim->add_option("--out-dir", sim_dir, "output directory")->default_val(".");

  std::string ev_ranking, ev_truth, ev_pr = "pr.csv", ev_fix = "fixes.csv";
  CLI::App* ev = app.add_subcommand("eval", "score a ranking against ground truth");
  ev->add_option("--ranking", ev_ranking, "debug or baseline JSON")->required();
  ev->add_option("--truth", ev_truth, "truth JSON")->required();
  ev->add_option("--out-pr", ev_pr, "PR curve CSV")->default_val("pr.csv");
  ev->add_option("--out-fix", ev_fix, "fix curve CSV")->default_val("fixes.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  Eigen::setNbThreads(threads);
  try {
    if (*dbg) return cmd_debug(dbg_data, gamma0, gamma_floor, budget, max_rounds, dbg_out);
    if (*bl) return cmd_baseline(bl_data, method, n_pos, n_neg, restarts, bl_out);
    if (*sim)
      return cmd_simulate(generator, sim_seed, sim_n, sim_classes, sim_noise, credit_rows,
                          credit_protected, sim_dir);
    if (*ev) return cmd_eval(ev_ranking, ev_truth, ev_pr, ev_fix);
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
