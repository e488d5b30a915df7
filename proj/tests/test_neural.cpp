#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mmv/neural.hpp"
#include "mmv/numerics.hpp"
#include "mmv/rng.hpp"

using namespace mmv;

namespace {

std::vector<TrainingPair> random_pairs(int n, int d_in, int d_out, RngState& rng) {
  std::vector<TrainingPair> out(n);
  for (auto& p : out) {
    p.input.resize(d_in);
    p.target.resize(d_out);
    for (double& v : p.input) v = rng.normal();
    for (double& v : p.target) v = std::tanh(rng.normal());
  }
  return out;
}

std::vector<SequencePair> random_sequences(int n, int steps, int d_in, int d_out,
                                           RngState& rng) {
  std::vector<SequencePair> out(n);
  for (auto& s : out) {
    s.inputs.resize(steps);
    s.targets.resize(steps);
    for (int t = 0; t < steps; ++t) {
      s.inputs[t].resize(d_in);
      s.targets[t].resize(d_out);
      for (double& v : s.inputs[t]) v = rng.normal();
      for (double& v : s.targets[t]) v = std::tanh(rng.normal());
    }
  }
  return out;
}

// Central finite differences over every scalar parameter; the independent
// oracle for the analytic gradients.
template <typename Params, typename LossFn>
double max_grad_rel_error(Params& p, const Params& grad, const LossFn& loss) {
  const double h = 1e-5;
  auto fields = p.fields();
  auto gfields = grad.fields();
  double worst = 0.0;
  double gnorm = 0.0;
  for (const Mat* g : gfields)
    for (double v : g->data) gnorm = std::max(gnorm, std::fabs(v));
  for (size_t f = 0; f < fields.size(); ++f) {
    Mat& m = *fields[f];
    for (size_t i = 0; i < m.data.size(); ++i) {
      const double orig = m.data[i];
      m.data[i] = orig + h;
      const double fp = loss();
      m.data[i] = orig - h;
      const double fm = loss();
      m.data[i] = orig;
      const double fd = (fp - fm) / (2.0 * h);
      const double an = gfields[f]->data[i];
      const double denom = std::max({std::fabs(fd), std::fabs(an), 1e-8 * gnorm, 1e-12});
      worst = std::max(worst, std::fabs(fd - an) / denom);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("mlp forward matches a hand-computed tiny network") {
  MlpParams p;
  p.w1 = Mat{{1.0}};
  p.b1 = Mat{{0.5}};
  p.w2 = Mat{{2.0}};
  p.b2 = Mat(1, 1);
  p.w3 = Mat{{1.0}};
  p.b3 = Mat(1, 1);
  p.w4 = Mat{{-1.0}};
  p.b4 = Mat{{0.25}};
  const double x = 0.3;
  double h = std::tanh(1.0 * x + 0.5);
  h = std::tanh(2.0 * h);
  h = std::tanh(h);
  const double expected = std::tanh(-h + 0.25);
  const auto out = mlp_forward(p, {x});
  REQUIRE(out.size() == 1);
  CHECK(out[0] == doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mlp batched forward equals per-sample forward") {
  RngState rng(1);
  MlpParams p = MlpParams::glorot(5, 7, 6, 6, 4, rng);
  Mat inputs = gaussian(rng, 5, 9);
  const Mat batch = mlp_forward_batch(p, inputs);
  for (int c = 0; c < 9; ++c) {
    const auto one = mlp_forward(p, inputs.col_vec(c));
    for (int r = 0; r < 4; ++r) CHECK(batch(r, c) == doctest::Approx(one[r]).epsilon(1e-13));
  }
}

TEST_CASE("mlp analytic gradient vs central finite differences, 20 networks") {
  for (uint64_t trial = 0; trial < 20; ++trial) {
    RngState rng(100 + trial);
    const int d_in = 2 + static_cast<int>(rng.uniform() * 4);
    const int d_out = 1 + static_cast<int>(rng.uniform() * 4);
    MlpParams p = MlpParams::glorot(d_in, 5, 4, 4, d_out, rng);
    const auto batch = random_pairs(3, d_in, d_out, rng);
    const auto [loss, grad] = mlp_loss_and_grad(p, batch);
    CHECK(loss > 0.0);
    const double err =
        max_grad_rel_error(p, grad, [&] { return mlp_loss_and_grad(p, batch).first; });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("rnn forward matches a hand-stepped scalar recurrence") {
  RnnParams p;
  p.w_ih = Mat{{0.7}};
  p.w_hh = Mat{{-0.4}};
  p.w_ho = Mat{{1.2}};
  p.b_h = Mat{{0.1}};
  p.b_o = Mat{{-0.2}};
  const std::vector<std::vector<double>> seq = {{0.5}, {-1.0}, {2.0}};
  double h = 0.0;
  const auto [outs, hiddens] = rnn_forward(p, seq, {0.0});
  REQUIRE(outs.size() == 3);
  for (int t = 0; t < 3; ++t) {
    h = std::tanh(0.7 * seq[t][0] - 0.4 * h + 0.1);
    const double y = std::tanh(1.2 * h - 0.2);
    CHECK(hiddens[t][0] == doctest::Approx(h).epsilon(1e-14));
    CHECK(outs[t][0] == doctest::Approx(y).epsilon(1e-14));
  }
}

TEST_CASE("rnn hidden state carries information across steps") {
  RngState rng(2);
  RnnParams p = RnnParams::glorot(3, 8, 2, rng);
  std::vector<std::vector<double>> seq = {{1, 0, 0}, {0, 0, 0}};
  auto [outs_a, h_a] = rnn_forward(p, seq, std::vector<double>(8, 0.0));
  seq[0] = {0, 1, 0};
  auto [outs_b, h_b] = rnn_forward(p, seq, std::vector<double>(8, 0.0));
  // Same second input, different first input: outputs at step 2 must differ.
  double diff = 0.0;
  for (int i = 0; i < 2; ++i) diff += std::fabs(outs_a[1][i] - outs_b[1][i]);
  CHECK(diff > 1e-8);
}

TEST_CASE("rnn analytic gradient (BPTT) vs central finite differences, 20 networks") {
  for (uint64_t trial = 0; trial < 20; ++trial) {
    RngState rng(200 + trial);
    const int d_in = 2 + static_cast<int>(rng.uniform() * 3);
    const int d_out = 1 + static_cast<int>(rng.uniform() * 3);
    const int steps = 2 + static_cast<int>(rng.uniform() * 3);
    RnnParams p = RnnParams::glorot(d_in, 5, d_out, rng);
    const auto seqs = random_sequences(2, steps, d_in, d_out, rng);
    const auto [loss, grad] = rnn_loss_and_grad(p, seqs);
    CHECK(loss > 0.0);
    const double err =
        max_grad_rel_error(p, grad, [&] { return rnn_loss_and_grad(p, seqs).first; });
    CHECK(err <= 1e-5);
  }
}

TEST_CASE("rnn_loss_and_grad handles mixed sequence lengths") {
  RngState rng(3);
  RnnParams p = RnnParams::glorot(3, 6, 2, rng);
  auto a = random_sequences(2, 2, 3, 2, rng);
  auto b = random_sequences(3, 4, 3, 2, rng);
  a.insert(a.end(), b.begin(), b.end());
  const auto [loss_mixed, grad_mixed] = rnn_loss_and_grad(p, a);
  // Oracle: one sequence at a time, weighting each per-sequence mean by its
  // step count (the batched loss averages over all steps of all sequences).
  double total_steps = 0.0, loss_sum = 0.0;
  RnnParams gsum = p;
  for (Mat* m : gsum.fields()) std::fill(m->data.begin(), m->data.end(), 0.0);
  for (const auto& s : a) {
    const double steps = static_cast<double>(s.inputs.size());
    total_steps += steps;
    const auto [l, g] = rnn_loss_and_grad(p, {s});
    loss_sum += steps * l;
    auto gs = gsum.fields();
    auto gf = g.fields();
    for (size_t f = 0; f < gs.size(); ++f)
      for (size_t i = 0; i < gs[f]->data.size(); ++i)
        gs[f]->data[i] += steps * gf[f]->data[i];
  }
  CHECK(loss_mixed == doctest::Approx(loss_sum / total_steps).epsilon(1e-10));
  auto gm = grad_mixed.fields();
  auto gs = gsum.fields();
  for (size_t f = 0; f < gm.size(); ++f)
    for (size_t i = 0; i < gm[f]->data.size(); ++i)
      CHECK(gm[f]->data[i] == doctest::Approx(gs[f]->data[i] / total_steps).epsilon(1e-9));
}

TEST_CASE("adam fits a small regression and the loss curve decreases") {
  RngState rng(4);
  MlpParams p = MlpParams::glorot(2, 8, 8, 8, 1, rng);
  std::vector<TrainingPair> data;
  for (int i = 0; i < 256; ++i) {
    const double x0 = rng.normal(), x1 = rng.normal();
    data.push_back({{x0, x1}, {std::tanh(0.6 * x0 - 0.3 * x1)}});
  }
  AdamConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 32;
  cfg.seed = 9;
  const auto curve = train_mlp(p, data, cfg);
  REQUIRE(static_cast<int>(curve.size()) == cfg.epochs);
  CHECK(curve.back() < 0.05 * curve.front());
}

TEST_CASE("adam training is deterministic for a fixed seed") {
  auto run = [] {
    RngState rng(5);
    MlpParams p = MlpParams::glorot(3, 6, 6, 6, 2, rng);
    auto data = random_pairs(64, 3, 2, rng);
    AdamConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 11;
    train_mlp(p, data, cfg);
    return p;
  };
  const MlpParams a = run(), b = run();
  CHECK(a.w1.data == b.w1.data);
  CHECK(a.w4.data == b.w4.data);
  CHECK(a.b2.data == b.b2.data);
}

TEST_CASE("weight round trip and inspect") {
  RngState rng(6);
  const std::string dir = std::filesystem::temp_directory_path() / "mmv_neural_test";
  std::filesystem::create_directories(dir);

  MlpParams mp = MlpParams::glorot(4, 5, 5, 5, 3, rng);
  save_mlp(dir + "/m.bin", mp);
  const MlpParams ml = load_mlp(dir + "/m.bin");
  for (size_t f = 0; f < mp.fields().size(); ++f)
    CHECK(mp.fields()[f]->data == ml.fields()[f]->data);

  RnnParams rp = RnnParams::glorot(3, 7, 2, rng);
  save_rnn(dir + "/r.bin", rp);
  const RnnParams rl = load_rnn(dir + "/r.bin");
  for (size_t f = 0; f < rp.fields().size(); ++f)
    CHECK(rp.fields()[f]->data == rl.fields()[f]->data);

  const auto [kind, shapes] = inspect_weights(dir + "/r.bin");
  CHECK(kind == 2);
  REQUIRE(shapes.size() == 5);
  CHECK(shapes[0] == std::pair<uint32_t, uint32_t>{7, 3});   // w_ih
  CHECK(shapes[1] == std::pair<uint32_t, uint32_t>{7, 7});   // w_hh
  CHECK(shapes[2] == std::pair<uint32_t, uint32_t>{2, 7});   // w_ho

  CHECK_THROWS_AS(load_rnn(dir + "/m.bin"), std::runtime_error);  // kind mismatch
}

TEST_CASE("weight loader rejects bad magic and truncation with byte offsets") {
  RngState rng(7);
  const std::string dir = std::filesystem::temp_directory_path() / "mmv_neural_test";
  std::filesystem::create_directories(dir);
  MlpParams mp = MlpParams::glorot(2, 3, 3, 3, 1, rng);
  save_mlp(dir + "/t.bin", mp);

  {
    std::fstream f(dir + "/t.bin", std::ios::in | std::ios::out | std::ios::binary);
    f.put('X');  // corrupt magic
  }
  CHECK_THROWS_WITH_AS(load_mlp(dir + "/t.bin"), doctest::Contains("MMVNN1"),
                       std::runtime_error);

  save_mlp(dir + "/t.bin", mp);
  std::filesystem::resize_file(dir + "/t.bin", 40);
  CHECK_THROWS_WITH_AS(load_mlp(dir + "/t.bin"), doctest::Contains("byte"),
                       std::runtime_error);
}

TEST_CASE("mlp file starts with the documented magic bytes") {
  RngState rng(8);
  const std::string dir = std::filesystem::temp_directory_path() / "mmv_neural_test";
  std::filesystem::create_directories(dir);
  save_mlp(dir + "/magic.bin", MlpParams::glorot(2, 3, 3, 3, 1, rng));
  std::ifstream f(dir + "/magic.bin", std::ios::binary);
  char head[8] = {};
  f.read(head, 8);
  CHECK(std::string(head, 7) == std::string("MMVNN1\0", 7));
  CHECK(head[7] == 1);  // kind byte: MLP
}
