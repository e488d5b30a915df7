#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mmv/mat.hpp"
#include "mmv/mimo_channel.hpp"
#include "mmv/neural.hpp"

namespace mmv {

struct SceneConfig {
  int m_tx = 144;
  int n_rx = 4;
  int t_pilots = 72;
  int sparsity = 18;
  double power_db = 35.0;
  double snr_db = 30.0;  // used when the sweep axis is t_pilots
};

struct SolverConfig {
  std::string name;                  // somp | sp | glasso | alg1 | alg2
  std::string weights;               // alg1/alg2 weight file
  std::vector<double> lambda_grid;   // glasso: oracle-tuned over this grid
  int fista_iters = 500;
  int max_iterations = 0;            // 0 -> solver default
};

struct GenDataConfig {
  int mlp_pairs = 15000;      // rounded up to a whole number of problems
  int rnn_sequences = 12000;  // split across rnn_parts before equalizing
  int rnn_parts = 4;
  int rnn_iters = 12;         // pursuit steps per problem
  std::optional<double> train_snr_db;  // unset -> noiseless training data
  bool paired_supports = true;  // plant (i, i + n/2) row pairs like real-stacked scenes
};

struct TrainConfig {
  AdamConfig adam;
  int mlp_width = 256;  // n1 = n2 = n3
  int rnn_hidden = 1024;
};

struct ExperimentConfig {
  SceneConfig scene;
  std::string sweep_axis = "snr_db";  // snr_db | t_pilots
  std::vector<double> sweep_values;
  std::vector<SolverConfig> solvers;
  int trials = 1;
  uint64_t seed = 1;
  uint64_t pilot_seed = 7;  // the pilot is shared by all trials at a sweep point
  std::string output_dir = ".";
  bool measure_walltime = true;  // false writes wall_ms = 0 for byte-stable output
  GenDataConfig gen;
  TrainConfig train;

  void validate() const;
};

ExperimentConfig load_config(const std::string& path);

/// The sensing matrix every learned solver is trained against: real-stacked
/// S^H A_T for the pilot drawn from (pilot_seed, t_pilots).
Mat training_sensing_matrix(const ExperimentConfig& cfg, int t_pilots);

struct ResultRow {
  std::string solver;
  std::string sweep_axis;
  double sweep_value = 0.0;
  int trial = 0;
  uint64_t seed = 0;
  double nmse = 0.0;
  int iterations = 0;
  double wall_ms = 0.0;
  std::string error;
};

/// Writes mlp_pairs.bin / rnn_sequences.bin (plus CSV exports) to out_dir.
void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir);

/// kind: "mlp" or "rnn". Trains on the dataset file and writes the weight
/// file plus an epoch,mean_loss CSV next to it.
void cmd_train(const ExperimentConfig& cfg, const std::string& kind,
               const std::string& dataset_path, const std::string& weights_out,
               const std::string& loss_csv_out);

/// Runs the sweep; writes results.csv and summary.csv to out_dir and returns
/// the rows in deterministic (point, trial, solver) order.
std::vector<ResultRow> cmd_run(const ExperimentConfig& cfg, const std::string& out_dir);

double median(std::vector<double> v);

}  // namespace mmv
