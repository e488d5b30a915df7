#pragma once

#include <vector>

#include "mmv/mat.hpp"

namespace mmv {

/// Sensing matrix + measurements + target sparsity: the input contract for
/// every solver in this library.
struct MmvProblem {
  Mat a;  // m x n
  Mat y;  // m x K
  int k = 0;

  void validate() const;
};

struct StoppingRule {
  double residual_threshold = 0.0;  // gamma
  int max_iterations = 1;
};

/// Default gamma for noiseless runs: 1e-6 * ||y||_F.
double default_gamma(const Mat& y);

/// gamma for noisy runs with known per-entry noise std.
double noise_gamma(int m, int k_cols, double sigma);

struct RecoveryResult {
  Mat x_hat;                                 // n x K
  std::vector<std::vector<int>> support;     // sorted, per column
  std::vector<double> residual_norm_history; // Frobenius norm per iteration
  int iterations = 0;
  bool converged = false;
};

/// Orthogonal matching pursuit, single measurement vector (K = 1).
/// Selection correlations use l2-normalized columns; ties break to the
/// lowest index.
RecoveryResult omp(const MmvProblem& problem, const StoppingRule& stop);

/// Simultaneous OMP: one shared support, selection by the l2 norm of each
/// row of A^T R, per-column least-squares refit.
RecoveryResult somp(const MmvProblem& problem, const StoppingRule& stop);

/// Classical subspace pursuit (K = 1): expand by the k best correlations,
/// refit, prune to k, stop when the residual norm stops strictly decreasing
/// (keeping the previous iterate), on gamma, or on max_iterations.
RecoveryResult subspace_pursuit(const MmvProblem& problem, const StoppingRule& stop);

/// min 1/2 ||Y - AX||_F^2 + lambda * sum_i ||row_i(X)||_2 by FISTA with
/// function-value restarts; step 1/L with L from power iteration.
RecoveryResult group_lasso(const MmvProblem& problem, double lambda, int fista_iters);

/// Indices of the r largest values of |v|, lowest index first on ties;
/// returned sorted ascending.
std::vector<int> top_k_abs(const std::vector<double>& v, int r);

}  // namespace mmv
