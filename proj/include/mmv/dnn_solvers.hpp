#pragma once

#include <functional>
#include <vector>

#include "mmv/classic_solvers.hpp"
#include "mmv/mat.hpp"
#include "mmv/neural.hpp"

namespace mmv {

/// Score source for the block pursuit: maps the stacked residual (length
/// m*K) to block scores (length n*K). Injectable so oracle stubs can stand
/// in for the trained MLP.
using BlockScorer = std::function<std::vector<double>(const std::vector<double>&)>;

/// Score source for the modified subspace pursuit: maps the residual matrix
/// (m x K) to a score matrix (n x K), one sweep over the K columns.
using ColumnScorer = std::function<Mat(const Mat&)>;

struct AlgorithmOneOptions {
  /// Refit over all accumulated blocks (default) or only the newest block.
  bool accumulated_refit = true;
};

/// Network-guided block pursuit on the Kronecker-stacked system: feed the
/// stacked residual to the scorer, pick the unchosen block with the largest
/// l2 norm of scores, refit, repeat while ||r|| > gamma.
RecoveryResult algorithm_one(const MmvProblem& problem, const BlockScorer& scorer,
                             const StoppingRule& stop, const AlgorithmOneOptions& opt = {});
RecoveryResult algorithm_one(const MmvProblem& problem, const MlpParams& mlp,
                             const StoppingRule& stop, const AlgorithmOneOptions& opt = {});

/// Modified subspace pursuit: per column, take the k largest |scores|, union
/// with the previous support, refit, prune back to k, recompute the
/// residual; stops on gamma, max_iterations, or a non-decreasing residual
/// norm (keeping the previous iterate).
RecoveryResult algorithm_two(const MmvProblem& problem, const ColumnScorer& scorer,
                             const StoppingRule& stop);

struct RnnScorerOptions {
  /// Carry the hidden state across the K columns within one sweep (default)
  /// or reset it per column.
  bool carry_hidden = true;
};

/// The trained-RNN scorer for algorithm_two; hidden state resets between
/// outer iterations.
ColumnScorer make_rnn_scorer(const RnnParams& rnn, const RnnScorerOptions& opt = {});

/// The classical-SP scorer R -> A^T R; algorithm_two with this scorer
/// reduces to subspace_pursuit on K = 1 problems.
ColumnScorer make_correlation_scorer(const Mat& a);

RecoveryResult algorithm_two(const MmvProblem& problem, const RnnParams& rnn,
                             const StoppingRule& stop, const RnnScorerOptions& opt = {});

}  // namespace mmv
