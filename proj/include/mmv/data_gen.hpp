#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmv/mat.hpp"
#include "mmv/neural.hpp"
#include "mmv/rng.hpp"

namespace mmv {

/// Training pairs for the block-pursuit MLP: stacked residual (length m*K)
/// in, block indicator (length n*K, whole blocks of ones) out.
struct BlockPairSet {
  std::vector<TrainingPair> pairs;
  int m = 0, n = 0, K = 0, k = 0;
  uint64_t seed = 0;
};

/// Training sequences for the RNN: one K-step sequence per pursuit step,
/// inputs are per-column residuals (length m), targets 0/1 indicators
/// (length n, at most k ones).
struct ResidualPairSet {
  std::vector<SequencePair> sequences;
  /// Planted support of the problem behind sequences[i]. In-memory only --
  /// kept for tests and diagnostics, not serialized by save_residual_pairs.
  std::vector<std::vector<int>> planted;
  int m = 0, n = 0, K = 0, k = 0;
  uint64_t seed = 0;
};

/// Knobs shared by both generators.
struct TrainDataOptions {
  /// When set, adds Gaussian noise to Y scaled so ||Y||^2 / E||noise||^2
  /// matches this SNR.
  std::optional<double> train_snr_db;
  /// Plant supports as (i, i + n/2) pairs with N(0, 1/2) values — the row
  /// structure real-stacked complex channel problems actually have.
  bool paired_supports = false;
};

/// Network inputs are scale-normalized so training transfers across pilot
/// powers: returns v * sqrt(len(v)) / ||v|| (zero vectors pass through).
std::vector<double> normalize_input(std::vector<double> v);

/// Follows the greedy block pursuit on planted jointly-sparse problems
/// (Y = A X + noise): at each of the k steps, emit (current stacked
/// residual, half-scale planted coefficients of every block not yet
/// selected), then subtract the most correlated block's least-squares fit.
/// Step 0's target therefore covers the full planted support.
BlockPairSet generate_block_pairs(const Mat& a, int num_cols, int k, int num_problems,
                                  RngState& rng, const TrainDataOptions& opt = {});

/// Follows the subspace-pursuit residual trace: step 0 selects the k largest
/// |A^T Y(:,i)| per column; each step emits per-column (residual, half-scale
/// planted coefficients missing from the support that produced it -- the rows
/// whose energy is still in the residual) and re-selects/re-projects by
/// correlation. Stops at `iters` steps or when the residual drops below
/// 1e-6 * ||Y||_F.
ResidualPairSet generate_residual_pairs(const Mat& a, int num_cols, int k, int num_problems,
                                        int iters, RngState& rng,
                                        const TrainDataOptions& opt = {});

/// Concatenate independently generated parts after truncating each to the
/// smallest part's sequence count, so every part contributes equally.
ResidualPairSet merge_equalized_parts(const std::vector<ResidualPairSet>& parts);

/// Planted jointly-sparse signal: one support of size k shared by all
/// num_cols columns, values i.i.d. standard normal.
Mat plant_joint_sparse(int n, int num_cols, int k, RngState& rng,
                       std::vector<int>* support_out = nullptr);

// Dataset files: magic "MMVDS1\0", u8 kind (1 = block pairs, 2 = residual
// sequences), u32 m, n, K, k, u64 count, then float64 payload per record;
// little-endian throughout.
void save_block_pairs(const std::string& path, const BlockPairSet& set);
BlockPairSet load_block_pairs(const std::string& path);
void save_residual_pairs(const std::string& path, const ResidualPairSet& set);
ResidualPairSet load_residual_pairs(const std::string& path);

void export_block_pairs_csv(const std::string& path, const BlockPairSet& set);
void export_residual_pairs_csv(const std::string& path, const ResidualPairSet& set);

}  // namespace mmv
