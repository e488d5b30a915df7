#include "mmv/dnn_solvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mmv/data_gen.hpp"
#include "mmv/numerics.hpp"

namespace mmv {

namespace {

Mat expand_support(int n, const Mat& x_sub, const std::vector<int>& support) {
  Mat x(n, x_sub.cols);
  for (size_t i = 0; i < support.size(); ++i)
    for (int c = 0; c < x_sub.cols; ++c) x(support[i], c) = x_sub(static_cast<int>(i), c);
  return x;
}

}  // namespace

RecoveryResult algorithm_one(const MmvProblem& problem, const BlockScorer& scorer,
                             const StoppingRule& stop, const AlgorithmOneOptions& opt) {
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

  // lstsq needs |chosen| * K <= m * K columns and |chosen| <= n blocks.
  const int max_blocks = std::min(a.rows, n);
  std::vector<int> chosen;  // selection order
  std::vector<char> taken(n, 0);

  while (res.iterations < stop.max_iterations &&
         static_cast<int>(chosen.size()) < max_blocks) {
    const std::vector<double> scores = scorer(stack_rows(r).col_vec(0));
    if (static_cast<int>(scores.size()) != n * kk)
      throw std::invalid_argument("algorithm_one: scorer output length mismatch");

    int best = -1;
    double best_val = -1.0;
    for (int b = 0; b < n; ++b) {
      if (taken[b]) continue;
      double v = 0.0;
      for (int c = 0; c < kk; ++c) {
        const double s = scores[static_cast<size_t>(b) * kk + c];
        v += s * s;
      }
      if (v > best_val) {
        best_val = v;
        best = b;
      }
    }
    if (best < 0) break;
    chosen.push_back(best);
    taken[best] = 1;

    std::vector<int> support = chosen;
    std::sort(support.begin(), support.end());
    if (opt.accumulated_refit) {
      const Mat a_sub = a.cols_subset(support);
      const Mat x_sub = lstsq(a_sub, y);
      r = sub(y, matmul(a_sub, x_sub));
      res.x_hat = expand_support(n, x_sub, support);
    } else {
      // Literal single-block update: fit the newest block against the
      // current residual and subtract.
      const Mat a_b = a.cols_subset({best});
      const Mat x_b = lstsq(a_b, r);
      r = sub(r, matmul(a_b, x_b));
      for (int c = 0; c < kk; ++c) res.x_hat(best, c) += x_b(0, c);
    }
    for (int c = 0; c < kk; ++c) res.support[c] = support;
    rnorm = frobenius_norm(r);
    res.residual_norm_history.push_back(rnorm);
    ++res.iterations;
    if (rnorm <= stop.residual_threshold) {
      res.converged = true;
      break;
    }
  }
  return res;
}

RecoveryResult algorithm_one(const MmvProblem& problem, const MlpParams& mlp,
                             const StoppingRule& stop, const AlgorithmOneOptions& opt) {
  const int want_in = problem.a.rows * problem.y.cols;
  const int want_out = problem.a.cols * problem.y.cols;
  if (mlp.d_in() != want_in || mlp.d_out() != want_out)
    throw std::invalid_argument("algorithm_one: MLP shapes (" + std::to_string(mlp.d_in()) +
                                " -> " + std::to_string(mlp.d_out()) +
                                ") do not match the stacked problem (" + std::to_string(want_in) +
                                " -> " + std::to_string(want_out) + ")");
  // Networks are trained on unit-RMS inputs; rescale so the tanh layers see
  // the same input statistics regardless of the physical signal power.
  return algorithm_one(
      problem,
      [&mlp](const std::vector<double>& r) { return mlp_forward(mlp, normalize_input(r)); }, stop,
      opt);
}

RecoveryResult algorithm_two(const MmvProblem& problem, const ColumnScorer& scorer,
                             const StoppingRule& stop) {
  problem.validate();
  const Mat& a = problem.a;
  const Mat& y = problem.y;
  const int n = a.cols, kk = y.cols, k = problem.k;
  if (2 * k > a.rows)
    throw std::invalid_argument("algorithm_two: union size 2k exceeds measurement dimension");
  const Mat at = transpose(a);

  RecoveryResult res;
  res.x_hat = Mat(n, kk);
  res.support.assign(kk, {});

  if (frobenius_norm(y) <= stop.residual_threshold) {
    res.converged = true;
    res.residual_norm_history.push_back(frobenius_norm(y));
    return res;
  }

  // Initial supports from the k strongest correlations per column.
  std::vector<std::vector<int>> support(kk);
  Mat r(a.rows, kk);
  const Mat corr0 = matmul(at, y);
  for (int c = 0; c < kk; ++c) {
    support[c] = top_k_abs(corr0.col_vec(c), k);
    const Mat a_sub = a.cols_subset(support[c]);
    const Mat x_sub = lstsq(a_sub, y.col(c));
    r.set_col(c, sub(y.col(c), matmul(a_sub, x_sub)));
    for (size_t i = 0; i < support[c].size(); ++i)
      res.x_hat(support[c][i], c) = x_sub(static_cast<int>(i), 0);
    res.support[c] = support[c];
  }
  double rnorm = frobenius_norm(r);
  res.residual_norm_history.push_back(rnorm);

  while (rnorm > stop.residual_threshold && res.iterations < stop.max_iterations) {
    const Mat scores = scorer(r);
    if (scores.rows != n || scores.cols != kk)
      throw std::invalid_argument("algorithm_two: scorer output shape mismatch");

    std::vector<std::vector<int>> support_new(kk);
    Mat x_new(n, kk);
    Mat r_new(a.rows, kk);
    for (int c = 0; c < kk; ++c) {
      std::vector<int> extra = top_k_abs(scores.col_vec(c), k);
      std::vector<int> candidates = support[c];
      candidates.insert(candidates.end(), extra.begin(), extra.end());
      std::sort(candidates.begin(), candidates.end());
      candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

      const Mat x_cand = lstsq(a.cols_subset(candidates), y.col(c));
      std::vector<double> full(n, 0.0);
      for (size_t i = 0; i < candidates.size(); ++i)
        full[candidates[i]] = x_cand(static_cast<int>(i), 0);
      support_new[c] = top_k_abs(full, k);

      const Mat a_sub = a.cols_subset(support_new[c]);
      const Mat x_sub = lstsq(a_sub, y.col(c));
      r_new.set_col(c, sub(y.col(c), matmul(a_sub, x_sub)));
      for (size_t i = 0; i < support_new[c].size(); ++i)
        x_new(support_new[c][i], c) = x_sub(static_cast<int>(i), 0);
    }
    const double rnorm_new = frobenius_norm(r_new);
    ++res.iterations;

    if (rnorm_new >= rnorm) {
      res.converged = true;
      break;
    }
    support = support_new;
    r = r_new;
    rnorm = rnorm_new;
    res.residual_norm_history.push_back(rnorm);
    res.x_hat = x_new;
    for (int c = 0; c < kk; ++c) res.support[c] = support[c];
    for (auto& s : res.support) std::sort(s.begin(), s.end());
    if (rnorm <= stop.residual_threshold) res.converged = true;
  }
  return res;
}

ColumnScorer make_rnn_scorer(const RnnParams& rnn, const RnnScorerOptions& opt) {
  return [rnn, opt](const Mat& r) {
    if (r.rows != rnn.d_in())
      throw std::invalid_argument("rnn scorer: residual dimension " + std::to_string(r.rows) +
                                  " does not match RNN input " + std::to_string(rnn.d_in()));
    Mat scores(rnn.d_out(), r.cols);
    const std::vector<double> h0(static_cast<size_t>(rnn.n_hidden()), 0.0);
    // Networks are trained on unit-RMS inputs; rescale each residual column
    // so the tanh layers see the same input statistics regardless of the
    // physical signal power.
    if (opt.carry_hidden) {
      std::vector<std::vector<double>> seq;
      for (int c = 0; c < r.cols; ++c) seq.push_back(normalize_input(r.col_vec(c)));
      const auto [outputs, hidden] = rnn_forward(rnn, seq, h0);
      for (int c = 0; c < r.cols; ++c) scores.set_col(c, from_vec(outputs[c]));
    } else {
      for (int c = 0; c < r.cols; ++c) {
        const auto [outputs, hidden] = rnn_forward(rnn, {normalize_input(r.col_vec(c))}, h0);
        scores.set_col(c, from_vec(outputs[0]));
      }
    }
    return scores;
  };
}

ColumnScorer make_correlation_scorer(const Mat& a) {
  const Mat at = transpose(a);
  return [at](const Mat& r) { return matmul(at, r); };
}

RecoveryResult algorithm_two(const MmvProblem& problem, const RnnParams& rnn,
                             const StoppingRule& stop, const RnnScorerOptions& opt) {
  if (rnn.d_in() != problem.a.rows || rnn.d_out() != problem.a.cols)
    throw std::invalid_argument("algorithm_two: RNN shapes (" + std::to_string(rnn.d_in()) +
                                " -> " + std::to_string(rnn.d_out()) +
                                ") do not match the problem (" + std::to_string(problem.a.rows) +
                                " -> " + std::to_string(problem.a.cols) + ")");
  return algorithm_two(problem, make_rnn_scorer(rnn, opt), stop);
}

}  // namespace mmv
