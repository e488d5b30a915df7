#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mmv/mat.hpp"
#include "mmv/rng.hpp"

namespace mmv {

/// Four-layer tanh MLP. Biases are column vectors.
struct MlpParams {
  Mat w1, b1;
  Mat w2, b2;
  Mat w3, b3;
  Mat w4, b4;

  int d_in() const { return w1.cols; }
  int d_out() const { return w4.rows; }
  void validate() const;

  static MlpParams glorot(int d_in, int n1, int n2, int n3, int d_out, RngState& rng);

  std::vector<Mat*> fields() { return {&w1, &b1, &w2, &b2, &w3, &b3, &w4, &b4}; }
  std::vector<const Mat*> fields() const { return {&w1, &b1, &w2, &b2, &w3, &b3, &w4, &b4}; }
};

/// Single-layer vanilla RNN with tanh hidden and output activations:
///   o_t = W_ih x_t + W_hh h_{t-1} + b_h;  h_t = tanh(o_t);
///   y_t = tanh(W_ho h_t + b_o)
struct RnnParams {
  Mat w_ih, w_hh, w_ho;
  Mat b_h, b_o;

  int d_in() const { return w_ih.cols; }
  int d_out() const { return w_ho.rows; }
  int n_hidden() const { return w_hh.rows; }
  void validate() const;

  static RnnParams glorot(int d_in, int n_hidden, int d_out, RngState& rng);

  std::vector<Mat*> fields() { return {&w_ih, &w_hh, &w_ho, &b_h, &b_o}; }
  std::vector<const Mat*> fields() const { return {&w_ih, &w_hh, &w_ho, &b_h, &b_o}; }
};

struct TrainingPair {
  std::vector<double> input;
  std::vector<double> target;
};

/// One training sample for the RNN: aligned input/target step sequences.
struct SequencePair {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> targets;
};

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int epochs = 30;
  int batch_size = 64;
  uint64_t seed = 0;

  void validate() const;
};

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& r);

/// Batched forward over inputs as columns; returns the output layer (d_out x B).
Mat mlp_forward_batch(const MlpParams& p, const Mat& inputs);

/// Mean over the batch of ||target - output||^2, with exact analytic gradients.
std::pair<double, MlpParams> mlp_loss_and_grad(const MlpParams& p,
                                               const std::vector<TrainingPair>& batch);

/// Outputs and hidden states at every step.
std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> rnn_forward(
    const RnnParams& p, const std::vector<std::vector<double>>& sequence,
    const std::vector<double>& h0);

/// Mean over all steps and sequences of ||target_t - y_t||^2; gradients by
/// backpropagation through time over each full sequence. h0 = 0.
std::pair<double, RnnParams> rnn_loss_and_grad(const RnnParams& p,
                                               const std::vector<SequencePair>& sequences);

/// Minibatch loss+gradient: given shuffled sample indices, return the batch
/// loss and write gradients for every parameter field.
using LossGradFn =
    std::function<double(const std::vector<int>& batch, std::vector<Mat>& grads)>;

/// Adam with bias correction over an arbitrary parameter list. Shuffling is
/// drawn from cfg.seed; returns the per-epoch mean loss. Throws on a
/// non-finite loss, naming the epoch.
std::vector<double> adam_train(std::vector<Mat*> params, int num_samples,
                               const AdamConfig& cfg, const LossGradFn& fn);

std::vector<double> train_mlp(MlpParams& p, const std::vector<TrainingPair>& data,
                              const AdamConfig& cfg);
std::vector<double> train_rnn(RnnParams& p, const std::vector<SequencePair>& data,
                              const AdamConfig& cfg);

// Weight files: magic "MMVNN1\0", u8 kind (1 = MLP, 2 = RNN), u32 matrix
// count, then per matrix u32 rows, u32 cols and row-major float64 data;
// everything little-endian.
void save_mlp(const std::string& path, const MlpParams& p);
void save_rnn(const std::string& path, const RnnParams& p);
MlpParams load_mlp(const std::string& path);
RnnParams load_rnn(const std::string& path);

/// Peek at a weight file: (kind, list of shapes).
std::pair<int, std::vector<std::pair<uint32_t, uint32_t>>> inspect_weights(
    const std::string& path);

}  // namespace mmv
