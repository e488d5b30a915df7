#include "mmv/classic_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "mmv/numerics.hpp"

namespace mmv {

void MmvProblem::validate() const {
  if (a.rows != y.rows) throw std::invalid_argument("MmvProblem: a.rows != y.rows");
  if (k < 1 || k > a.rows || k > a.cols)
    throw std::invalid_argument("MmvProblem: need 1 <= k <= min(rows, cols)");
  for (int j = 0; j < a.cols; ++j) {
    double n = 0.0;
    for (int i = 0; i < a.rows; ++i) n += a(i, j) * a(i, j);
    if (n == 0.0) throw std::invalid_argument("MmvProblem: zero column in sensing matrix");
  }
}

double default_gamma(const Mat& y) { return 1e-6 * frobenius_norm(y); }

double noise_gamma(int m, int k_cols, double sigma) {
  return std::sqrt(static_cast<double>(m) * k_cols) * sigma;
}

std::vector<int> top_k_abs(const std::vector<double>& v, int r) {
  std::vector<int> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (r < 0 || r > static_cast<int>(v.size()))
    throw std::invalid_argument("top_k_abs: r out of range");
  const int rr = r;
  std::partial_sort(idx.begin(), idx.begin() + rr, idx.end(), [&](int i, int j) {
    const double ai = std::fabs(v[i]), aj = std::fabs(v[j]);
    if (ai != aj) return ai > aj;
    return i < j;
  });
  idx.resize(rr);
  std::sort(idx.begin(), idx.end());
  return idx;
}

namespace {

std::vector<double> column_norms(const Mat& a) {
  std::vector<double> n(a.cols, 0.0);
  for (int i = 0; i < a.rows; ++i)
    for (int j = 0; j < a.cols; ++j) n[j] += a(i, j) * a(i, j);
  for (double& v : n) v = std::sqrt(v);
  return n;
}

// Scatter a dense solution on `support` back into the n x K estimate.
Mat expand_support(int n, const Mat& x_sub, const std::vector<int>& support) {
  Mat x(n, x_sub.cols);
  for (size_t i = 0; i < support.size(); ++i)
    for (int c = 0; c < x_sub.cols; ++c) x(support[i], c) = x_sub(static_cast<int>(i), c);
  return x;
}

RecoveryResult matching_pursuit(const MmvProblem& problem, const StoppingRule& stop,
                                bool joint) {
  problem.validate();
  const Mat& a = problem.a;
  const Mat& y = problem.y;
  const int n = a.cols, kk = y.cols;

  RecoveryResult res;
  res.x_hat = Mat(n, kk);
  res.support.assign(kk, {});

  Mat r = y;
  double rnorm = frobenius_norm(r);
  res.residual_norm_history.push_back(rnorm);
  if (rnorm <= stop.residual_threshold) {
    res.converged = true;
    return res;
  }

  const std::vector<double> cnorm = column_norms(a);
  const Mat at = transpose(a);
  std::vector<int> sel;  // in selection order
  std::vector<char> taken(n, 0);

  while (res.iterations < stop.max_iterations &&
         static_cast<int>(sel.size()) < problem.k) {
    // Correlation of each (normalized) column against the residual.
    Mat corr = matmul(at, r);
    int best = -1;
    double best_val = 0.0;
    for (int i = 0; i < n; ++i) {
      if (taken[i]) continue;
      double v = 0.0;
      if (joint) {
        for (int c = 0; c < kk; ++c) v += corr(i, c) * corr(i, c);
        v = std::sqrt(v);
      } else {
        v = std::fabs(corr(i, 0));
      }
      v /= cnorm[i];
      if (v > best_val) {
        best_val = v;
        best = i;
      }
    }
    if (best < 0) break;  // residual orthogonal to every remaining column
    sel.push_back(best);
    taken[best] = 1;

    std::vector<int> support = sel;
    std::sort(support.begin(), support.end());
    const Mat a_sub = a.cols_subset(support);
    const Mat x_sub = lstsq(a_sub, y);
    r = sub(y, matmul(a_sub, x_sub));
    rnorm = frobenius_norm(r);
    res.residual_norm_history.push_back(rnorm);
    res.x_hat = expand_support(n, x_sub, support);
    for (int c = 0; c < kk; ++c) res.support[c] = support;
    ++res.iterations;
    if (rnorm <= stop.residual_threshold) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace

RecoveryResult omp(const MmvProblem& problem, const StoppingRule& stop) {
  if (problem.y.cols != 1) throw std::invalid_argument("omp: requires a single measurement vector");
  return matching_pursuit(problem, stop, /*joint=*/false);
}

RecoveryResult somp(const MmvProblem& problem, const StoppingRule& stop) {
  return matching_pursuit(problem, stop, /*joint=*/true);
}

RecoveryResult subspace_pursuit(const MmvProblem& problem, const StoppingRule& stop) {
  if (problem.y.cols != 1) throw std::invalid_argument("subspace_pursuit: requires K = 1");
  problem.validate();
  const Mat& a = problem.a;
  const Mat& y = problem.y;
  const int n = a.cols, k = problem.k;
  const Mat at = transpose(a);

  RecoveryResult res;
  res.x_hat = Mat(n, 1);
  res.support.assign(1, {});

  if (frobenius_norm(y) <= stop.residual_threshold) {
    res.converged = true;
    res.residual_norm_history.push_back(frobenius_norm(y));
    return res;
  }

  // Initialization: k strongest correlations against y, projection residual.
  std::vector<int> support = top_k_abs(matmul(at, y).col_vec(0), k);
  Mat x_sub = lstsq(a.cols_subset(support), y);
  Mat r = sub(y, matmul(a.cols_subset(support), x_sub));
  double rnorm = frobenius_norm(r);
  res.residual_norm_history.push_back(rnorm);
  res.x_hat = expand_support(n, x_sub, support);
  res.support[0] = support;

  while (rnorm > stop.residual_threshold && res.iterations < stop.max_iterations) {
    // Expand by the k strongest residual correlations.
    std::vector<int> extra = top_k_abs(matmul(at, r).col_vec(0), k);
    std::vector<int> candidates = support;
    candidates.insert(candidates.end(), extra.begin(), extra.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    const Mat x_cand = lstsq(a.cols_subset(candidates), y);
    // Prune to the k largest coefficients.
    std::vector<double> full(n, 0.0);
    for (size_t i = 0; i < candidates.size(); ++i) full[candidates[i]] = x_cand(static_cast<int>(i), 0);
    std::vector<int> pruned = top_k_abs(full, k);

    const Mat x_new = lstsq(a.cols_subset(pruned), y);
    const Mat r_new = sub(y, matmul(a.cols_subset(pruned), x_new));
    const double rnorm_new = frobenius_norm(r_new);
    ++res.iterations;

    if (rnorm_new >= rnorm) {
      // Not an improvement: keep the previous iterate and stop.
      res.converged = true;
      break;
    }
    support = pruned;
    x_sub = x_new;
    r = r_new;
    rnorm = rnorm_new;
    res.residual_norm_history.push_back(rnorm);
    res.x_hat = expand_support(n, x_sub, support);
    res.support[0] = support;
    if (rnorm <= stop.residual_threshold) res.converged = true;
  }
  return res;
}

RecoveryResult group_lasso(const MmvProblem& problem, double lambda, int fista_iters) {
  if (lambda <= 0.0) throw std::invalid_argument("group_lasso: lambda must be positive");
  problem.validate();
  const Mat& a = problem.a;
  const Mat& y = problem.y;
  const int n = a.cols, kk = y.cols;
  const Mat at = transpose(a);

  // Lipschitz constant of the gradient: largest eigenvalue of A^T A.
  Mat v(n, 1);
  for (int i = 0; i < n; ++i) v(i, 0) = 1.0 / std::sqrt(static_cast<double>(n));
  double l_const = 1.0;
  for (int it = 0; it < 100; ++it) {
    Mat w = matmul(at, matmul(a, v));
    const double norm = frobenius_norm(w);
    if (norm == 0.0) break;
    l_const = norm;
    v = scale(w, 1.0 / norm);
  }

  auto objective = [&](const Mat& x) {
    const double r = frobenius_norm(sub(y, matmul(a, x)));
    double pen = 0.0;
    for (int i = 0; i < n; ++i) {
      double rn = 0.0;
      for (int c = 0; c < kk; ++c) rn += x(i, c) * x(i, c);
      pen += std::sqrt(rn);
    }
    return 0.5 * r * r + lambda * pen;
  };

  const double step = 1.0 / l_const;
  Mat x(n, kk), z(n, kk);
  double t = 1.0;
  double obj_prev = objective(x);

  for (int it = 0; it < fista_iters; ++it) {
    const Mat grad = matmul(at, sub(matmul(a, z), y));
    Mat x_new = sub(z, scale(grad, step));
    // Row-wise block soft threshold.
    for (int i = 0; i < n; ++i) {
      double rn = 0.0;
      for (int c = 0; c < kk; ++c) rn += x_new(i, c) * x_new(i, c);
      rn = std::sqrt(rn);
      const double shrink = rn <= lambda * step ? 0.0 : 1.0 - lambda * step / rn;
      for (int c = 0; c < kk; ++c) x_new(i, c) *= shrink;
    }
    const double t_new = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double obj_new = objective(x_new);
    if (obj_new > obj_prev) {
      // Function-value restart: drop momentum.
      z = x_new;
      t = 1.0;
    } else {
      z = add(x_new, scale(sub(x_new, x), (t - 1.0) / t_new));
      t = t_new;
    }
    x = x_new;
    obj_prev = std::min(obj_prev, obj_new);
  }

  RecoveryResult res;
  res.iterations = fista_iters;
  res.converged = true;

  // Support: rows with norm above 1e-6 of the largest row norm.
  std::vector<double> row_norm(n, 0.0);
  double max_rn = 0.0;
  for (int i = 0; i < n; ++i) {
    double rn = 0.0;
    for (int c = 0; c < kk; ++c) rn += x(i, c) * x(i, c);
    row_norm[i] = std::sqrt(rn);
    max_rn = std::max(max_rn, row_norm[i]);
  }
  res.x_hat = Mat(n, kk);
  std::vector<int> support;
  for (int i = 0; i < n; ++i) {
    if (max_rn > 0.0 && row_norm[i] > 1e-6 * max_rn) {
      support.push_back(i);
      for (int c = 0; c < kk; ++c) res.x_hat(i, c) = x(i, c);
    }
  }
  res.support.assign(kk, support);
  res.residual_norm_history.push_back(frobenius_norm(sub(y, matmul(a, res.x_hat))));
  return res;
}

}  // namespace mmv
