#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mmv/classic_solvers.hpp"
#include "mmv/data_gen.hpp"
#include "mmv/dnn_solvers.hpp"
#include "mmv/numerics.hpp"
#include "mmv/rng.hpp"

using namespace mmv;

namespace {

struct Planted {
  MmvProblem problem;
  std::vector<int> support;
  Mat x_true;
};

Planted plant(int m, int n, int big_k, int k, RngState& rng) {
  Planted p;
  p.problem.a = gaussian(rng, m, n);
  p.x_true = plant_joint_sparse(n, big_k, k, rng, &p.support);
  p.problem.y = matmul(p.problem.a, p.x_true);
  p.problem.k = k;
  return p;
}

// Oracle block scorer: scores 1 on the true support's blocks, 0 elsewhere.
BlockScorer oracle_block_scorer(const std::vector<int>& support, int n, int big_k) {
  return [support, n, big_k](const std::vector<double>& stacked) {
    REQUIRE(static_cast<int>(stacked.size()) % big_k == 0);
    std::vector<double> scores(static_cast<size_t>(n) * big_k, 0.0);
    for (int s : support)
      for (int t = 0; t < big_k; ++t) scores[static_cast<size_t>(s) * big_k + t] = 1.0;
    return scores;
  };
}

// Oracle column scorer: ±1 on true support rows in every column.
ColumnScorer oracle_column_scorer(const std::vector<int>& support, int n) {
  return [support, n](const Mat& r) {
    Mat scores(n, r.cols);
    for (int s : support)
      for (int c = 0; c < r.cols; ++c) scores(s, c) = 1.0;
    return scores;
  };
}

}  // namespace

TEST_CASE("algorithm_one with an oracle scorer nails every consistent problem") {
  // Criterion: residual <= 1e-8 * ||y|| whenever k <= m/3, 100 trials.
  int pass = 0;
  for (uint64_t t = 0; t < 100; ++t) {
    RngState rng(1000 + t);
    const int m = 24, n = 48, big_k = 3, k = 8;  // k == m/3
    Planted p = plant(m, n, big_k, k, rng);
    const auto res =
        algorithm_one(p.problem, oracle_block_scorer(p.support, n, big_k),
                      {1e-8 * frobenius_norm(p.problem.y), k});
    if (res.residual_norm_history.back() <= 1e-8 * frobenius_norm(p.problem.y)) ++pass;
  }
  CHECK(pass == 100);
}

TEST_CASE("algorithm_two with an oracle scorer nails every consistent problem") {
  int pass = 0;
  for (uint64_t t = 0; t < 100; ++t) {
    RngState rng(2000 + t);
    const int m = 24, n = 48, big_k = 3, k = 8;
    Planted p = plant(m, n, big_k, k, rng);
    const auto res = algorithm_two(p.problem, oracle_column_scorer(p.support, n),
                                   {1e-8 * frobenius_norm(p.problem.y), 10});
    if (res.residual_norm_history.back() <= 1e-8 * frobenius_norm(p.problem.y)) ++pass;
  }
  CHECK(pass == 100);
}

TEST_CASE("algorithm_one recovers the planted support itself with the oracle") {
  RngState rng(3);
  Planted p = plant(20, 40, 2, 5, rng);
  const auto res = algorithm_one(p.problem, oracle_block_scorer(p.support, 40, 2),
                                 {default_gamma(p.problem.y), 5});
  CHECK(res.support[0] == p.support);
  CHECK(frobenius_norm(sub(res.x_hat, p.x_true)) / frobenius_norm(p.x_true) < 1e-9);
}

TEST_CASE("algorithm_one handles y = 0 without calling the scorer") {
  MmvProblem p;
  RngState rng(4);
  p.a = gaussian(rng, 8, 16);
  p.y = Mat(8, 2);
  p.k = 3;
  bool called = false;
  const auto res = algorithm_one(
      p, [&](const std::vector<double>& v) { called = true; return std::vector<double>(32, 0.0); },
      {0.0, 3});
  CHECK(!called);
  CHECK(res.converged);
  CHECK(frobenius_norm(res.x_hat) == 0.0);
}

TEST_CASE("algorithm_one single-block refit mode still reduces the residual") {
  RngState rng(5);
  Planted p = plant(20, 40, 2, 5, rng);
  AlgorithmOneOptions opt;
  opt.accumulated_refit = false;
  const auto res = algorithm_one(p.problem, oracle_block_scorer(p.support, 40, 2),
                                 {default_gamma(p.problem.y), 5}, opt);
  for (size_t i = 1; i < res.residual_norm_history.size(); ++i)
    CHECK(res.residual_norm_history[i] <= res.residual_norm_history[i - 1] + 1e-12);
}

TEST_CASE("algorithm_one rejects an MLP whose shapes disagree with the problem") {
  RngState rng(6);
  MmvProblem p;
  p.a = gaussian(rng, 8, 16);
  p.y = gaussian(rng, 8, 2);
  p.k = 3;
  MlpParams wrong = MlpParams::glorot(10, 4, 4, 4, 10, rng);
  CHECK_THROWS_AS(algorithm_one(p, wrong, {0.0, 3}), std::invalid_argument);
}

TEST_CASE("algorithm_two with the correlation scorer matches subspace_pursuit bit-for-bit") {
  // Criterion: K = 1, 50 trials, identical bytes out.
  for (uint64_t t = 0; t < 50; ++t) {
    RngState rng(3000 + t);
    const int m = 32, n = 64, k = 6;
    Planted p = plant(m, n, 1, k, rng);
    if (t % 3 == 0) {  // mix in noisy instances
      Mat noise = gaussian(rng, m, 1);
      p.problem.y = add(p.problem.y, scale(noise, 0.05));
    }
    const StoppingRule stop{default_gamma(p.problem.y), 20};
    const auto sp = subspace_pursuit(p.problem, stop);
    const auto a2 = algorithm_two(p.problem, make_correlation_scorer(p.problem.a), stop);
    CHECK(sp.x_hat.data == a2.x_hat.data);
    CHECK(sp.support == a2.support);
    CHECK(sp.residual_norm_history == a2.residual_norm_history);
    CHECK(sp.iterations == a2.iterations);
    CHECK(sp.converged == a2.converged);
  }
}

TEST_CASE("algorithm_two keeps one shared-size support per column") {
  RngState rng(7);
  Planted p = plant(24, 48, 4, 6, rng);
  const auto res = algorithm_two(p.problem, make_correlation_scorer(p.problem.a),
                                 {default_gamma(p.problem.y), 15});
  REQUIRE(res.support.size() == 4);
  for (const auto& s : res.support) CHECK(static_cast<int>(s.size()) == p.problem.k);
}

TEST_CASE("algorithm_two rejects k > m/2") {
  RngState rng(8);
  MmvProblem p;
  p.a = gaussian(rng, 10, 30);
  p.y = gaussian(rng, 10, 2);
  p.k = 6;  // 2k = 12 > 10
  CHECK_THROWS_AS(algorithm_two(p, make_correlation_scorer(p.a), {0.0, 5}), std::invalid_argument);
}

TEST_CASE("rnn scorer output shape and hidden-state carry option") {
  RngState rng(9);
  const int m = 6, n = 12, big_k = 3;
  RnnParams rnn = RnnParams::glorot(m, 10, n, rng);
  const Mat r = gaussian(rng, m, big_k);

  const Mat carried = make_rnn_scorer(rnn)(r);
  CHECK(carried.rows == n);
  CHECK(carried.cols == big_k);

  RnnScorerOptions reset;
  reset.carry_hidden = false;
  const Mat isolated = make_rnn_scorer(rnn, reset)(r);
  // First column sees h0 = 0 either way.
  for (int i = 0; i < n; ++i) CHECK(carried(i, 0) == doctest::Approx(isolated(i, 0)));
  // Later columns differ once the hidden state is carried.
  double diff = 0.0;
  for (int i = 0; i < n; ++i) diff += std::fabs(carried(i, 1) - isolated(i, 1));
  CHECK(diff > 1e-12);

  // Reset-per-column equals running the net on each (normalized) column
  // independently.
  const auto [outs, h] =
      rnn_forward(rnn, {normalize_input(r.col_vec(1))}, std::vector<double>(10, 0.0));
  for (int i = 0; i < n; ++i) CHECK(isolated(i, 1) == doctest::Approx(outs[0][i]).epsilon(1e-13));
}

TEST_CASE("algorithm_two with an untrained rnn still terminates with invariants") {
  RngState rng(10);
  Planted p = plant(16, 32, 2, 4, rng);
  RnnParams rnn = RnnParams::glorot(16, 12, 32, rng);
  const auto res = algorithm_two(p.problem, rnn, {default_gamma(p.problem.y), 8});
  CHECK(res.iterations <= 8);
  for (const auto& s : res.support) CHECK(static_cast<int>(s.size()) == p.problem.k);
  for (size_t i = 1; i < res.residual_norm_history.size(); ++i)
    CHECK(res.residual_norm_history[i] < res.residual_norm_history[i - 1]);
}
