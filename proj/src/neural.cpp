#include "mmv/neural.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace mmv {

namespace {

void check_finite(const Mat& m, const char* what) {
  if (!m.is_finite()) throw std::runtime_error(std::string(what) + ": non-finite entries");
}

Mat glorot_mat(int rows, int cols, RngState& rng) {
  const double limit = std::sqrt(6.0 / (rows + cols));
  Mat m(rows, cols);
  for (double& v : m.data) v = (2.0 * rng.uniform() - 1.0) * limit;
  return m;
}

Mat tanh_mat(Mat m) {
  for (double& v : m.data) v = std::tanh(v);
  return m;
}

// z + b broadcast over columns
Mat add_bias(Mat z, const Mat& b) {
  for (int i = 0; i < z.rows; ++i) {
    const double bi = b(i, 0);
    for (int j = 0; j < z.cols; ++j) z(i, j) += bi;
  }
  return z;
}

Mat row_sums(const Mat& m) {
  Mat s(m.rows, 1);
  for (int i = 0; i < m.rows; ++i)
    for (int j = 0; j < m.cols; ++j) s(i, 0) += m(i, j);
  return s;
}

// delta * (1 - act^2), the tanh backward pass
Mat tanh_backward(Mat delta, const Mat& act) {
  for (size_t i = 0; i < delta.data.size(); ++i)
    delta.data[i] *= 1.0 - act.data[i] * act.data[i];
  return delta;
}

Mat gather_cols(const Mat& m, const std::vector<int>& idx) {
  Mat out(m.rows, static_cast<int>(idx.size()));
  for (int j = 0; j < out.cols; ++j)
    for (int i = 0; i < m.rows; ++i) out(i, j) = m(i, idx[j]);
  return out;
}

}  // namespace

void MlpParams::validate() const {
  if (b1.cols != 1 || b2.cols != 1 || b3.cols != 1 || b4.cols != 1)
    throw std::invalid_argument("MlpParams: biases must be column vectors");
  if (w1.rows != b1.rows || w2.rows != b2.rows || w3.rows != b3.rows || w4.rows != b4.rows ||
      w2.cols != w1.rows || w3.cols != w2.rows || w4.cols != w3.rows)
    throw std::invalid_argument("MlpParams: incompatible layer shapes");
  for (const Mat* m : fields()) check_finite(*m, "MlpParams");
}

MlpParams MlpParams::glorot(int d_in, int n1, int n2, int n3, int d_out, RngState& rng) {
  MlpParams p;
  p.w1 = glorot_mat(n1, d_in, rng);
  p.b1 = Mat(n1, 1);
  p.w2 = glorot_mat(n2, n1, rng);
  p.b2 = Mat(n2, 1);
  p.w3 = glorot_mat(n3, n2, rng);
  p.b3 = Mat(n3, 1);
  p.w4 = glorot_mat(d_out, n3, rng);
  p.b4 = Mat(d_out, 1);
  return p;
}

void RnnParams::validate() const {
  if (b_h.cols != 1 || b_o.cols != 1)
    throw std::invalid_argument("RnnParams: biases must be column vectors");
  if (w_hh.rows != w_hh.cols || w_ih.rows != w_hh.rows || w_ho.cols != w_hh.rows ||
      b_h.rows != w_hh.rows || b_o.rows != w_ho.rows)
    throw std::invalid_argument("RnnParams: incompatible shapes");
  for (const Mat* m : fields()) check_finite(*m, "RnnParams");
}

RnnParams RnnParams::glorot(int d_in, int n_hidden, int d_out, RngState& rng) {
  RnnParams p;
  p.w_ih = glorot_mat(n_hidden, d_in, rng);
  p.w_hh = glorot_mat(n_hidden, n_hidden, rng);
  p.w_ho = glorot_mat(d_out, n_hidden, rng);
  p.b_h = Mat(n_hidden, 1);
  p.b_o = Mat(d_out, 1);
  return p;
}

void AdamConfig::validate() const {
  if (learning_rate < 0.0) throw std::invalid_argument("AdamConfig: negative learning rate");
  if (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0)
    throw std::invalid_argument("AdamConfig: betas must lie in (0, 1)");
  if (epochs < 0 || batch_size < 1) throw std::invalid_argument("AdamConfig: bad epoch/batch");
}

Mat mlp_forward_batch(const MlpParams& p, const Mat& inputs) {
  if (inputs.rows != p.d_in()) throw std::invalid_argument("mlp_forward: input length mismatch");
  Mat a1 = tanh_mat(add_bias(matmul(p.w1, inputs), p.b1));
  Mat a2 = tanh_mat(add_bias(matmul(p.w2, a1), p.b2));
  Mat a3 = tanh_mat(add_bias(matmul(p.w3, a2), p.b3));
  return tanh_mat(add_bias(matmul(p.w4, a3), p.b4));
}

std::vector<double> mlp_forward(const MlpParams& p, const std::vector<double>& r) {
  return mlp_forward_batch(p, from_vec(r)).col_vec(0);
}

namespace {

// Batched loss + gradient over input/target column blocks. `scale` multiplies
// the per-sample squared error (1/B for a plain batch mean).
double mlp_backward(const MlpParams& p, const Mat& x, const Mat& t, double loss_scale,
                    std::vector<Mat>& grads) {
  Mat a1 = tanh_mat(add_bias(matmul(p.w1, x), p.b1));
  Mat a2 = tanh_mat(add_bias(matmul(p.w2, a1), p.b2));
  Mat a3 = tanh_mat(add_bias(matmul(p.w3, a2), p.b3));
  Mat out = tanh_mat(add_bias(matmul(p.w4, a3), p.b4));

  Mat err = sub(out, t);
  double loss = 0.0;
  for (double v : err.data) loss += v * v;
  loss *= loss_scale;

  Mat d4 = tanh_backward(scale(err, 2.0 * loss_scale), out);
  grads[6] = matmul(d4, transpose(a3));  // w4
  grads[7] = row_sums(d4);               // b4
  Mat d3 = tanh_backward(matmul(transpose(p.w4), d4), a3);
  grads[4] = matmul(d3, transpose(a2));
  grads[5] = row_sums(d3);
  Mat d2 = tanh_backward(matmul(transpose(p.w3), d3), a2);
  grads[2] = matmul(d2, transpose(a1));
  grads[3] = row_sums(d2);
  Mat d1 = tanh_backward(matmul(transpose(p.w2), d2), a1);
  grads[0] = matmul(d1, transpose(x));
  grads[1] = row_sums(d1);
  return loss;
}

Mat pairs_to_mat(const std::vector<TrainingPair>& pairs, bool targets) {
  const std::vector<double>& first = targets ? pairs[0].target : pairs[0].input;
  Mat m(static_cast<int>(first.size()), static_cast<int>(pairs.size()));
  for (size_t j = 0; j < pairs.size(); ++j) {
    const std::vector<double>& v = targets ? pairs[j].target : pairs[j].input;
    if (v.size() != static_cast<size_t>(m.rows))
      throw std::invalid_argument("TrainingPair: inconsistent vector lengths");
    for (int i = 0; i < m.rows; ++i) m(i, static_cast<int>(j)) = v[i];
  }
  return m;
}

}  // namespace

std::pair<double, MlpParams> mlp_loss_and_grad(const MlpParams& p,
                                               const std::vector<TrainingPair>& batch) {
  if (batch.empty()) throw std::invalid_argument("mlp_loss_and_grad: empty batch");
  const Mat x = pairs_to_mat(batch, false);
  const Mat t = pairs_to_mat(batch, true);
  if (x.rows != p.d_in() || t.rows != p.d_out())
    throw std::invalid_argument("mlp_loss_and_grad: pair lengths do not match the network");
  std::vector<Mat> grads(8);
  const double loss = mlp_backward(p, x, t, 1.0 / batch.size(), grads);
  MlpParams g;
  auto dst = g.fields();
  for (size_t i = 0; i < grads.size(); ++i) *dst[i] = std::move(grads[i]);
  return {loss, std::move(g)};
}

std::pair<std::vector<std::vector<double>>, std::vector<std::vector<double>>> rnn_forward(
    const RnnParams& p, const std::vector<std::vector<double>>& sequence,
    const std::vector<double>& h0) {
  if (static_cast<int>(h0.size()) != p.n_hidden())
    throw std::invalid_argument("rnn_forward: h0 length mismatch");
  std::vector<std::vector<double>> outputs, hiddens;
  Mat h = from_vec(h0);
  for (const auto& x : sequence) {
    if (static_cast<int>(x.size()) != p.d_in())
      throw std::invalid_argument("rnn_forward: input length mismatch");
    Mat o = add_bias(add(matmul(p.w_ih, from_vec(x)), matmul(p.w_hh, h)), p.b_h);
    h = tanh_mat(std::move(o));
    Mat y = tanh_mat(add_bias(matmul(p.w_ho, h), p.b_o));
    hiddens.push_back(h.col_vec(0));
    outputs.push_back(y.col_vec(0));
  }
  return {outputs, hiddens};
}

namespace {

// BPTT over a batch of equal-length sequences. xs/ts hold one d x B block per
// step. Accumulates into grads (field order w_ih, w_hh, w_ho, b_h, b_o) and
// returns the scaled squared-error sum.
double rnn_backward_batch(const RnnParams& p, const std::vector<Mat>& xs,
                          const std::vector<Mat>& ts, double loss_scale,
                          std::vector<Mat>& grads) {
  const int steps = static_cast<int>(xs.size());
  const int batch = xs[0].cols;
  std::vector<Mat> hs(steps), ys(steps);
  Mat h(p.n_hidden(), batch);  // h0 = 0
  for (int t = 0; t < steps; ++t) {
    h = tanh_mat(add_bias(add(matmul(p.w_ih, xs[t]), matmul(p.w_hh, h)), p.b_h));
    hs[t] = h;
    ys[t] = tanh_mat(add_bias(matmul(p.w_ho, h), p.b_o));
  }

  double loss = 0.0;
  Mat dh_next(p.n_hidden(), batch);
  for (int t = steps - 1; t >= 0; --t) {
    Mat err = sub(ys[t], ts[t]);
    for (double v : err.data) loss += v * v;
    Mat dy = tanh_backward(scale(err, 2.0 * loss_scale), ys[t]);
    grads[2] = add(grads[2], matmul(dy, transpose(hs[t])));
    grads[4] = add(grads[4], row_sums(dy));
    Mat dh = add(matmul(transpose(p.w_ho), dy), dh_next);
    Mat dz = tanh_backward(std::move(dh), hs[t]);
    grads[0] = add(grads[0], matmul(dz, transpose(xs[t])));
    if (t > 0) grads[1] = add(grads[1], matmul(dz, transpose(hs[t - 1])));
    grads[3] = add(grads[3], row_sums(dz));
    dh_next = matmul(transpose(p.w_hh), dz);
  }
  return loss * loss_scale;
}

std::vector<Mat> zero_like(const std::vector<const Mat*>& params) {
  std::vector<Mat> z;
  z.reserve(params.size());
  for (const Mat* m : params) z.emplace_back(m->rows, m->cols);
  return z;
}

// Batch sequences of identical length into per-step column blocks.
std::pair<std::vector<Mat>, std::vector<Mat>> stack_sequences(
    const std::vector<SequencePair>& seqs, const std::vector<int>& idx) {
  const int steps = static_cast<int>(seqs[idx[0]].inputs.size());
  const int d_in = static_cast<int>(seqs[idx[0]].inputs[0].size());
  const int d_out = static_cast<int>(seqs[idx[0]].targets[0].size());
  std::vector<Mat> xs(steps, Mat(d_in, static_cast<int>(idx.size())));
  std::vector<Mat> ts(steps, Mat(d_out, static_cast<int>(idx.size())));
  for (size_t j = 0; j < idx.size(); ++j) {
    const SequencePair& s = seqs[idx[j]];
    for (int t = 0; t < steps; ++t) {
      for (int i = 0; i < d_in; ++i) xs[t](i, static_cast<int>(j)) = s.inputs[t][i];
      for (int i = 0; i < d_out; ++i) ts[t](i, static_cast<int>(j)) = s.targets[t][i];
    }
  }
  return {std::move(xs), std::move(ts)};
}

}  // namespace

std::pair<double, RnnParams> rnn_loss_and_grad(const RnnParams& p,
                                               const std::vector<SequencePair>& sequences) {
  if (sequences.empty()) throw std::invalid_argument("rnn_loss_and_grad: empty batch");
  size_t total_steps = 0;
  for (const auto& s : sequences) {
    if (s.inputs.size() != s.targets.size() || s.inputs.empty())
      throw std::invalid_argument("rnn_loss_and_grad: misaligned sequence");
    total_steps += s.inputs.size();
  }
  const double loss_scale = 1.0 / static_cast<double>(total_steps);

  // Group by length so each group can run as one batch.
  std::vector<std::vector<int>> by_len;
  for (size_t i = 0; i < sequences.size(); ++i) {
    const size_t len = sequences[i].inputs.size();
    if (by_len.size() < len) by_len.resize(len);
    by_len[len - 1].push_back(static_cast<int>(i));
  }

  std::vector<Mat> grads = zero_like(p.fields());
  double loss = 0.0;
  for (const auto& group : by_len) {
    if (group.empty()) continue;
    auto [xs, ts] = stack_sequences(sequences, group);
    loss += rnn_backward_batch(p, xs, ts, loss_scale, grads);
  }
  RnnParams g;
  auto dst = g.fields();
  for (size_t i = 0; i < grads.size(); ++i) *dst[i] = std::move(grads[i]);
  return {loss, std::move(g)};
}

std::vector<double> adam_train(std::vector<Mat*> params, int num_samples, const AdamConfig& cfg,
                               const LossGradFn& fn) {
  cfg.validate();
  if (num_samples < 1) throw std::invalid_argument("adam_train: no samples");

  std::vector<Mat> m_state, v_state;
  for (Mat* p : params) {
    m_state.emplace_back(p->rows, p->cols);
    v_state.emplace_back(p->rows, p->cols);
  }

  RngState rng(cfg.seed);
  std::vector<int> order(num_samples);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> loss_curve;
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    // Fisher-Yates from the seeded stream.
    for (int i = num_samples - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.next_u64() % static_cast<uint64_t>(i + 1));
      std::swap(order[i], order[j]);
    }

    double epoch_loss = 0.0;
    for (int start = 0; start < num_samples; start += cfg.batch_size) {
      const int end = std::min(num_samples, start + cfg.batch_size);
      std::vector<int> batch(order.begin() + start, order.begin() + end);
      std::vector<Mat> grads = zero_like({params.begin(), params.end()});
      const double loss = fn(batch, grads);
      if (!std::isfinite(loss))
        throw std::runtime_error("adam_train: non-finite loss at epoch " + std::to_string(epoch));
      epoch_loss += loss * batch.size();

      ++step;
      const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for (size_t pi = 0; pi < params.size(); ++pi) {
        Mat& p = *params[pi];
        Mat& m = m_state[pi];
        Mat& v = v_state[pi];
        const Mat& g = grads[pi];
        for (size_t i = 0; i < p.data.size(); ++i) {
          m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * g.data[i];
          v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * g.data[i] * g.data[i];
          const double m_hat = m.data[i] / bc1;
          const double v_hat = v.data[i] / bc2;
          p.data[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
        }
      }
    }
    loss_curve.push_back(epoch_loss / num_samples);
  }
  return loss_curve;
}

std::vector<double> train_mlp(MlpParams& p, const std::vector<TrainingPair>& data,
                              const AdamConfig& cfg) {
  p.validate();
  if (data.empty()) throw std::invalid_argument("train_mlp: empty dataset");
  const Mat inputs = pairs_to_mat(data, false);
  const Mat targets = pairs_to_mat(data, true);
  if (inputs.rows != p.d_in() || targets.rows != p.d_out())
    throw std::invalid_argument("train_mlp: dataset does not match network shapes");
  auto fn = [&](const std::vector<int>& batch, std::vector<Mat>& grads) {
    return mlp_backward(p, gather_cols(inputs, batch), gather_cols(targets, batch),
                        1.0 / batch.size(), grads);
  };
  return adam_train(p.fields(), static_cast<int>(data.size()), cfg, fn);
}

std::vector<double> train_rnn(RnnParams& p, const std::vector<SequencePair>& data,
                              const AdamConfig& cfg) {
  p.validate();
  if (data.empty()) throw std::invalid_argument("train_rnn: empty dataset");
  auto fn = [&](const std::vector<int>& batch, std::vector<Mat>& grads) {
    size_t steps = 0;
    for (int i : batch) steps += data[i].inputs.size();
    // All sequences in a generated dataset share one length; batch directly.
    bool uniform = true;
    for (int i : batch) uniform = uniform && data[i].inputs.size() == data[batch[0]].inputs.size();
    if (uniform) {
      auto [xs, ts] = stack_sequences(data, batch);
      return rnn_backward_batch(p, xs, ts, 1.0 / static_cast<double>(steps), grads);
    }
    double loss = 0.0;
    for (int i : batch) {
      auto [xs, ts] = stack_sequences(data, {i});
      loss += rnn_backward_batch(p, xs, ts, 1.0 / static_cast<double>(steps), grads);
    }
    return loss;
  };
  return adam_train(p.fields(), static_cast<int>(data.size()), cfg, fn);
}

// ---------------------------------------------------------------------------
// Weight persistence

namespace {

constexpr char kMagic[7] = {'M', 'M', 'V', 'N', 'N', '1', '\0'};

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<char*>(b), 4);
}

void write_f64(std::ostream& out, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<char*>(b), 8);
}

struct Reader {
  std::ifstream in;
  size_t offset = 0;

  explicit Reader(const std::string& path) : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("cannot open weight file: " + path);
  }
  void read(char* buf, size_t n) {
    in.read(buf, static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n)
      throw std::runtime_error("weight file truncated at byte offset " +
                               std::to_string(offset + static_cast<size_t>(in.gcount())));
    offset += n;
  }
  uint8_t read_u8() {
    char b;
    read(&b, 1);
    return static_cast<uint8_t>(b);
  }
  uint32_t read_u32() {
    unsigned char b[4];
    read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
  }
  double read_f64() {
    unsigned char b[8];
    read(reinterpret_cast<char*>(b), 8);
    uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
};

void save_params(const std::string& path, uint8_t kind, const std::vector<const Mat*>& mats) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write weight file: " + path);
  out.write(kMagic, sizeof(kMagic));
  out.put(static_cast<char>(kind));
  write_u32(out, static_cast<uint32_t>(mats.size()));
  for (const Mat* m : mats) {
    write_u32(out, static_cast<uint32_t>(m->rows));
    write_u32(out, static_cast<uint32_t>(m->cols));
    for (double v : m->data) write_f64(out, v);
  }
  if (!out) throw std::runtime_error("write failure: " + path);
}

std::vector<Mat> load_params(const std::string& path, uint8_t expected_kind,
                             size_t expected_count) {
  Reader r(path);
  char magic[7];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad magic in " + path + ": expected \"MMVNN1\\0\"");
  const uint8_t kind = r.read_u8();
  if (kind != expected_kind)
    throw std::runtime_error("weight kind mismatch in " + path + ": expected " +
                             std::to_string(expected_kind) + ", found " + std::to_string(kind));
  const uint32_t count = r.read_u32();
  if (count != expected_count)
    throw std::runtime_error("matrix count mismatch in " + path + ": expected " +
                             std::to_string(expected_count) + ", found " + std::to_string(count));
  std::vector<Mat> mats;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t rows = r.read_u32(), cols = r.read_u32();
    Mat m(static_cast<int>(rows), static_cast<int>(cols));
    for (double& v : m.data) v = r.read_f64();
    mats.push_back(std::move(m));
  }
  return mats;
}

}  // namespace

void save_mlp(const std::string& path, const MlpParams& p) { save_params(path, 1, p.fields()); }
void save_rnn(const std::string& path, const RnnParams& p) { save_params(path, 2, p.fields()); }

MlpParams load_mlp(const std::string& path) {
  std::vector<Mat> mats = load_params(path, 1, 8);
  MlpParams p;
  auto dst = p.fields();
  for (size_t i = 0; i < mats.size(); ++i) *dst[i] = std::move(mats[i]);
  p.validate();
  return p;
}

RnnParams load_rnn(const std::string& path) {
  std::vector<Mat> mats = load_params(path, 2, 5);
  RnnParams p;
  auto dst = p.fields();
  for (size_t i = 0; i < mats.size(); ++i) *dst[i] = std::move(mats[i]);
  p.validate();
  return p;
}

std::pair<int, std::vector<std::pair<uint32_t, uint32_t>>> inspect_weights(
    const std::string& path) {
  Reader r(path);
  char magic[7];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("bad magic in " + path + ": expected \"MMVNN1\\0\"");
  const int kind = r.read_u8();
  const uint32_t count = r.read_u32();
  std::vector<std::pair<uint32_t, uint32_t>> shapes;
  for (uint32_t i = 0; i < count; ++i) {
    const uint32_t rows = r.read_u32(), cols = r.read_u32();
    shapes.emplace_back(rows, cols);
    for (uint64_t j = 0; j < static_cast<uint64_t>(rows) * cols; ++j) r.read_f64();
  }
  return {kind, shapes};
}

}  // namespace mmv
