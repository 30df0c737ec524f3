#include "duti/learners.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "duti/rng.hpp"

namespace duti {

namespace {

// Row-stochastic softmax of z with log-sum-exp shift; also returns the
// per-row log partition when lse != nullptr.
Eigen::MatrixXd row_softmax(const Eigen::MatrixXd& z, Eigen::VectorXd* lse = nullptr) {
  Eigen::VectorXd zmax = z.rowwise().maxCoeff();
  Eigen::MatrixXd p = (z.colwise() - zmax).array().exp();
  Eigen::VectorXd norm = p.rowwise().sum();
  if (lse) *lse = norm.array().log() + zmax.array();
  p.array().colwise() /= norm.array();
  return p;
}

}  // namespace

Eigen::LLT<Eigen::MatrixXd> psd_llt(const Eigen::MatrixXd& h, double* jitter_used) {
  const double scale = std::max(h.diagonal().cwiseAbs().maxCoeff(), 1e-30);
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  double shift = 0.0;
  if (llt.info() != Eigen::Success) {
    for (double eps = 1e-12; eps <= 1.01e-6; eps *= 100.0) {
      Eigen::MatrixXd shifted = h;
      shift = eps * scale;
      shifted.diagonal().array() += shift;
      llt.compute(shifted);
      if (llt.info() == Eigen::Success) break;
    }
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "psd_llt: factorization failed even with a 1e-6 diagonal shift");
  }
  if (jitter_used) *jitter_used = shift;
  return llt;
}

Eigen::MatrixXd klr_hessian(const Eigen::MatrixXd& k, const Eigen::MatrixXd& prob,
                            double lambda) {
  if (prob.cols() < 2)
    throw std::invalid_argument("klr_hessian: need at least two classes");
  const Eigen::Index n = k.rows();
  const Eigen::Index c = prob.cols();
  const Eigen::Index q = c - 1;
  const double dn = static_cast<double>(n);
  Eigen::MatrixXd h(n * c, n * c);
  // leading (c-1) x (c-1) grid: each block K diag(w) K is symmetric, so the
  // mirror copy needs no transpose
  for (Eigen::Index j = 0; j < q; ++j) {
    for (Eigen::Index l = j; l < q; ++l) {
      Eigen::VectorXd w = -(prob.col(j).cwiseProduct(prob.col(l))) / dn;
      if (l == j) w += prob.col(j) / dn;
      h.block(j * n, l * n, n, n).noalias() = k * w.asDiagonal() * k;
      if (l != j) h.block(l * n, j * n, n, n) = h.block(j * n, l * n, n, n);
    }
  }
  // last row and column from the vanishing row sums of the weight grid
  for (Eigen::Index j = 0; j < q; ++j) {
    auto tail = h.block(j * n, q * n, n, n);
    tail = -h.block(j * n, 0, n, n);
    for (Eigen::Index l = 1; l < q; ++l) tail -= h.block(j * n, l * n, n, n);
    h.block(q * n, j * n, n, n) = tail;
  }
  {
    auto corner = h.block(q * n, q * n, n, n);
    corner = -h.block(q * n, 0, n, n);
    for (Eigen::Index l = 1; l < q; ++l) corner -= h.block(q * n, l * n, n, n);
  }
  for (Eigen::Index j = 0; j < c; ++j) h.block(j * n, j * n, n, n) += lambda * k;
  return h;
}

ModelParams train_krr(const KernelMatrix& km, const Eigen::VectorXd& y, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("train_krr: lambda must be positive");
  const auto n = km.k.rows();
  if (y.size() != n) throw std::invalid_argument("train_krr: y length does not match kernel");
  Eigen::MatrixXd a = km.k;
  a.diagonal().array() += static_cast<double>(n) * lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("train_krr: Cholesky failed; kernel system is not positive definite");
  Eigen::VectorXd alpha = llt.solve(y);
  // One refinement pass, then enforce the residual bound.
  Eigen::VectorXd r = y - a * alpha;
  alpha += llt.solve(r);
  r = y - a * alpha;
  const double bound = 1e-8 * (1.0 + y.cwiseAbs().maxCoeff());
  if (r.cwiseAbs().maxCoeff() > bound)
    throw std::runtime_error("train_krr: solve residual exceeds tolerance; system too ill-conditioned");

  ModelParams model;
  model.alpha = alpha;
  model.lambda = lambda;
  model.sigma = km.config.sigma;
  model.kkt_residual = r.cwiseAbs().maxCoeff();
  model.train_fingerprint = fingerprint_training(km.k, y, lambda, km.config.sigma);
  return model;
}

Eigen::VectorXd predict_krr(const Eigen::MatrixXd& k_cross, const ModelParams& model) {
  if (k_cross.cols() != model.alpha.rows())
    throw std::invalid_argument("predict_krr: cross kernel width does not match model size");
  return k_cross * model.alpha.col(0);
}

double klr_objective(const KernelMatrix& km, const Eigen::MatrixXd& w, double lambda,
                     const Eigen::MatrixXd& alpha) {
  const double n = static_cast<double>(km.k.rows());
  const Eigen::MatrixXd z = km.k * alpha;
  Eigen::VectorXd lse;
  row_softmax(z, &lse);
  const double data = (-(w.array() * z.array()).sum() + lse.sum()) / n;
  const double reg = 0.5 * lambda * (alpha.array() * z.array()).sum();
  return data + reg;
}

Eigen::MatrixXd klr_gradient(const KernelMatrix& km, const Eigen::MatrixXd& w,
                             double lambda, const Eigen::MatrixXd& alpha) {
  const double n = static_cast<double>(km.k.rows());
  const Eigen::MatrixXd z = km.k * alpha;
  const Eigen::MatrixXd p = row_softmax(z);
  return km.k * ((p - w) / n + lambda * alpha);
}

ModelParams train_klr_weighted(const KernelMatrix& km, const Eigen::MatrixXd& w,
                               double lambda, int max_iter, double tol,
                               const Eigen::MatrixXd* alpha0) {
  if (lambda <= 0.0) throw std::invalid_argument("train_klr_weighted: lambda must be positive");
  const auto n = km.k.rows();
  const auto k = w.cols();
  if (w.rows() != n) throw std::invalid_argument("train_klr_weighted: weight rows do not match kernel");
  if (k < 2) throw std::invalid_argument("train_klr_weighted: need at least two classes");

  Eigen::MatrixXd alpha =
      (alpha0 && alpha0->rows() == n && alpha0->cols() == k) ? *alpha0 : Eigen::MatrixXd::Zero(n, k);

  const double dn = static_cast<double>(n);
  double f = klr_objective(km, w, lambda, alpha);
  int iters = 0;
  double gnorm = 0.0;
  bool converged = false;

  for (; iters < max_iter; ++iters) {
    const Eigen::MatrixXd z = km.k * alpha;
    const Eigen::MatrixXd p = row_softmax(z);
    const Eigen::MatrixXd grad = km.k * ((p - w) / dn + lambda * alpha);
    gnorm = grad.cwiseAbs().maxCoeff();
    if (gnorm <= tol) {
      converged = true;
      break;
    }

    const Eigen::MatrixXd h = klr_hessian(km.k, p, lambda);
    const Eigen::LLT<Eigen::MatrixXd> llt = psd_llt(h);
    Eigen::VectorXd gv = Eigen::Map<const Eigen::VectorXd>(grad.data(), grad.size());
    Eigen::VectorXd sv = llt.solve(-gv);
    Eigen::Map<const Eigen::MatrixXd> step(sv.data(), n, k);

    const double slope = gv.dot(sv);  // negative for a descent direction
    double stepsize = 1.0;
    const double c = 1e-4;
    Eigen::MatrixXd trial;
    double ftrial = f;
    for (;;) {
      trial = alpha + stepsize * step;
      ftrial = klr_objective(km, w, lambda, trial);
      if (ftrial <= f + c * stepsize * slope) break;
      stepsize *= 0.5;
      if (stepsize < 1e-12)
        throw std::runtime_error("train_klr_weighted: line search stalled");
    }
    alpha = trial;
    f = ftrial;
  }

  if (!converged) {
    const Eigen::MatrixXd grad = klr_gradient(km, w, lambda, alpha);
    gnorm = grad.cwiseAbs().maxCoeff();
    converged = gnorm <= tol;
  }

  ModelParams model;
  model.alpha = alpha;
  model.lambda = lambda;
  model.sigma = km.config.sigma;
  model.newton_iterations = iters;
  model.converged = converged;
  model.kkt_residual = gnorm;
  model.train_fingerprint = fingerprint_training(km.k, w, lambda, km.config.sigma);
  return model;
}

Eigen::MatrixXd predict_klr(const Eigen::MatrixXd& k_cross, const ModelParams& model) {
  if (k_cross.cols() != model.alpha.rows())
    throw std::invalid_argument("predict_klr: cross kernel width does not match model size");
  return row_softmax(k_cross * model.alpha);
}

const std::vector<double> kDefaultLambdaGrid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0};
const std::vector<double> kDefaultSigmaFactors = {0.25, 0.5, 1.0, 2.0, 4.0};

CvResult cross_validate(const Dataset& data, std::vector<double> lambda_grid,
                        std::vector<double> sigma_grid, int folds, std::uint64_t seed) {
  validate(data);
  const int n = data.n();
  if (folds < 2) throw std::invalid_argument("cross_validate: folds must be at least 2");
  if (n < folds) throw std::invalid_argument("cross_validate: fewer items than folds");
  if (lambda_grid.empty() || sigma_grid.empty())
    throw std::invalid_argument("cross_validate: empty grid");
  std::sort(lambda_grid.begin(), lambda_grid.end());
  std::sort(sigma_grid.begin(), sigma_grid.end());

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(seed, /*stream=*/17);
  rng.shuffle(perm.begin(), perm.end());

  // fold f takes positions f, f + folds, ... of the shuffled order
  std::vector<std::vector<int>> val_idx(folds), train_idx(folds);
  for (int pos = 0; pos < n; ++pos) val_idx[pos % folds].push_back(perm[pos]);
  for (int f = 0; f < folds; ++f) {
    for (int g = 0; g < folds; ++g)
      if (g != f)
        train_idx[f].insert(train_idx[f].end(), val_idx[g].begin(), val_idx[g].end());
    std::sort(train_idx[f].begin(), train_idx[f].end());
    std::sort(val_idx[f].begin(), val_idx[f].end());
  }

  CvResult result;
  result.lambda_grid = lambda_grid;
  result.sigma_grid = sigma_grid;
  result.mean_loss.assign(lambda_grid.size() * sigma_grid.size(), 0.0);

  double best_loss = std::numeric_limits<double>::infinity();
  double best_lambda = lambda_grid.front();
  double best_sigma = sigma_grid.front();

  for (size_t si = 0; si < sigma_grid.size(); ++si) {
    const double sigma = sigma_grid[si];
    const KernelMatrix full = rbf_kernel_matrix(data.x, KernelConfig{sigma});
    for (size_t li = 0; li < lambda_grid.size(); ++li) {
      const double lambda = lambda_grid[li];
      double loss_sum = 0.0;
      int loss_count = 0;
      bool usable = true;
      for (int f = 0; f < folds && usable; ++f) try {
        const auto& tr = train_idx[f];
        const auto& va = val_idx[f];
        Eigen::MatrixXd ktr(tr.size(), tr.size());
        for (size_t r = 0; r < tr.size(); ++r)
          for (size_t c2 = 0; c2 < tr.size(); ++c2) ktr(r, c2) = full.k(tr[r], tr[c2]);
        Eigen::MatrixXd kva(va.size(), tr.size());
        for (size_t r = 0; r < va.size(); ++r)
          for (size_t c2 = 0; c2 < tr.size(); ++c2) kva(r, c2) = full.k(va[r], tr[c2]);
        const KernelMatrix kmf{ktr, KernelConfig{sigma}};
        if (data.task == Task::kRegression) {
          Eigen::VectorXd ytr(tr.size());
          for (size_t r = 0; r < tr.size(); ++r) ytr[r] = data.y[tr[r]];
          const ModelParams model = train_krr(kmf, ytr, lambda);
          const Eigen::VectorXd pred = predict_krr(kva, model);
          for (size_t r = 0; r < va.size(); ++r) {
            const double e = pred[r] - data.y[va[r]];
            loss_sum += e * e;
            ++loss_count;
          }
        } else {
          Eigen::VectorXi ltr(tr.size());
          for (size_t r = 0; r < tr.size(); ++r) ltr[r] = data.labels[tr[r]];
          const Eigen::MatrixXd w = one_hot(ltr, data.num_classes);
          const ModelParams model = train_klr_weighted(kmf, w, lambda);
          const Eigen::MatrixXd prob = predict_klr(kva, model);
          for (size_t r = 0; r < va.size(); ++r) {
            const double p = std::max(prob(r, data.labels[va[r]]), 1e-300);
            loss_sum += -std::log(p);
            ++loss_count;
          }
        }
      } catch (const std::runtime_error&) {
        usable = false;  // a grid corner the solver rejects scores as unusable
      }
      const double mean =
          usable ? loss_sum / loss_count : std::numeric_limits<double>::infinity();
      result.mean_loss[li * sigma_grid.size() + si] = mean;
      // <= with ascending grids resolves ties toward larger lambda, then sigma
      if (mean < best_loss ||
          (mean == best_loss &&
           (lambda_grid[li] > best_lambda ||
            (lambda_grid[li] == best_lambda && sigma_grid[si] > best_sigma)))) {
        best_loss = mean;
        best_lambda = lambda_grid[li];
        best_sigma = sigma_grid[si];
      }
    }
  }

  if (std::isinf(best_loss))
    throw std::runtime_error("cross_validate: every grid point failed to train");
  result.best.lambda = best_lambda;
  result.best.kernel.sigma = best_sigma;
  return result;
}

CvResult cross_validate(const Dataset& data, int folds, std::uint64_t seed) {
  const double med = median_heuristic_bandwidth(data.x);
  std::vector<double> sigmas;
  for (double f : kDefaultSigmaFactors) sigmas.push_back(f * med);
  return cross_validate(data, kDefaultLambdaGrid, sigmas, folds, seed);
}

}  // namespace duti
