#include "mmv/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include <json.hpp>

#include "mmv/classic_solvers.hpp"
#include "mmv/data_gen.hpp"
#include "mmv/dnn_solvers.hpp"
#include "mmv/numerics.hpp"

namespace mmv {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (sweep_axis != "snr_db" && sweep_axis != "t_pilots")
    throw std::invalid_argument("config: sweep_axis must be snr_db or t_pilots");
  if (sweep_values.empty()) throw std::invalid_argument("config: empty sweep_values");
  if (solvers.empty()) throw std::invalid_argument("config: empty solver list");
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (scene.m_tx < 1 || scene.n_rx < 1 || scene.t_pilots < 1 || scene.sparsity < 1 ||
      scene.sparsity > scene.m_tx)
    throw std::invalid_argument("config: invalid scene dimensions");
  for (const auto& s : solvers)
    if (s.name != "somp" && s.name != "sp" && s.name != "glasso" && s.name != "alg1" &&
        s.name != "alg2")
      throw std::invalid_argument("config: unknown solver '" + s.name + "'");
  if (gen.mlp_pairs < 1 || gen.rnn_sequences < 1 || gen.rnn_parts < 1 || gen.rnn_iters < 1)
    throw std::invalid_argument("config: invalid gen-data counts");
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error in " + path + ": " + e.what());
  }

  ExperimentConfig cfg;
  if (j.contains("scene")) {
    const auto& s = j["scene"];
    cfg.scene.m_tx = s.value("m_tx", cfg.scene.m_tx);
    cfg.scene.n_rx = s.value("n_rx", cfg.scene.n_rx);
    cfg.scene.t_pilots = s.value("t_pilots", cfg.scene.t_pilots);
    cfg.scene.sparsity = s.value("sparsity", cfg.scene.sparsity);
    cfg.scene.power_db = s.value("power_db", cfg.scene.power_db);
    cfg.scene.snr_db = s.value("snr_db", cfg.scene.snr_db);
  }
  if (j.contains("sweep")) {
    cfg.sweep_axis = j["sweep"].value("axis", cfg.sweep_axis);
    cfg.sweep_values = j["sweep"].value("values", cfg.sweep_values);
  }
  for (const auto& s : j.value("solvers", json::array())) {
    SolverConfig sc;
    sc.name = s.value("name", "");
    sc.weights = s.value("weights", "");
    sc.lambda_grid = s.value("lambda_grid", sc.lambda_grid);
    sc.fista_iters = s.value("fista_iters", sc.fista_iters);
    sc.max_iterations = s.value("max_iterations", sc.max_iterations);
    cfg.solvers.push_back(std::move(sc));
  }
  cfg.trials = j.value("trials", cfg.trials);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.pilot_seed = j.value("pilot_seed", cfg.pilot_seed);
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.measure_walltime = j.value("measure_walltime", cfg.measure_walltime);
  if (j.contains("gen_data")) {
    const auto& g = j["gen_data"];
    cfg.gen.mlp_pairs = g.value("mlp_pairs", cfg.gen.mlp_pairs);
    cfg.gen.rnn_sequences = g.value("rnn_sequences", cfg.gen.rnn_sequences);
    cfg.gen.rnn_parts = g.value("rnn_parts", cfg.gen.rnn_parts);
    cfg.gen.rnn_iters = g.value("rnn_iters", cfg.gen.rnn_iters);
    if (g.contains("train_snr_db") && !g["train_snr_db"].is_null())
      cfg.gen.train_snr_db = g["train_snr_db"].get<double>();
    cfg.gen.paired_supports = g.value("paired_supports", cfg.gen.paired_supports);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    cfg.train.mlp_width = t.value("mlp_width", cfg.train.mlp_width);
    cfg.train.rnn_hidden = t.value("rnn_hidden", cfg.train.rnn_hidden);
    cfg.train.adam.learning_rate = t.value("learning_rate", cfg.train.adam.learning_rate);
    cfg.train.adam.beta1 = t.value("beta1", cfg.train.adam.beta1);
    cfg.train.adam.beta2 = t.value("beta2", cfg.train.adam.beta2);
    cfg.train.adam.epsilon = t.value("epsilon", cfg.train.adam.epsilon);
    cfg.train.adam.epochs = t.value("epochs", cfg.train.adam.epochs);
    cfg.train.adam.batch_size = t.value("batch_size", cfg.train.adam.batch_size);
    cfg.train.adam.seed = t.value("seed", cfg.train.adam.seed);
  }
  cfg.validate();
  return cfg;
}

Mat training_sensing_matrix(const ExperimentConfig& cfg, int t_pilots) {
  RngState prng = RngState(cfg.pilot_seed).derive(static_cast<uint64_t>(t_pilots));
  const CMat pilot = make_pilot(cfg.scene.m_tx, t_pilots, cfg.scene.power_db, prng);
  // Abar = S^H A_T with the DFT transmit basis; reuse the scene path so the
  // training matrix is exactly what cmd_run solves against.
  RngState scene_rng(0);
  SceneOptions opt;
  opt.noiseless = true;
  opt.pilot = pilot;
  const ChannelScene scene = generate_scene(cfg.scene.m_tx, cfg.scene.n_rx, t_pilots, 1,
                                            cfg.scene.snr_db, cfg.scene.power_db, scene_rng, opt);
  return complex_to_real_stacked(to_cs_form(scene).a_bar);
}

void cmd_gen_data(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  const Mat a = training_sensing_matrix(cfg, cfg.scene.t_pilots);
  const int k_eff = 2 * cfg.scene.sparsity;
  const int num_cols = cfg.scene.n_rx;

  // MLP block pairs: k pairs per planted problem.
  {
    const int per_problem = k_eff;
    const int num_problems = (cfg.gen.mlp_pairs + per_problem - 1) / per_problem;
    RngState rng = RngState(cfg.seed).derive(0x6d6c70);  // "mlp"
    const TrainDataOptions gen_opt{cfg.gen.train_snr_db, cfg.gen.paired_supports};
    BlockPairSet set = generate_block_pairs(a, num_cols, k_eff, num_problems, rng, gen_opt);
    set.pairs.resize(static_cast<size_t>(cfg.gen.mlp_pairs));
    save_block_pairs(out_dir + "/mlp_pairs.bin", set);
  }

  // RNN residual sequences in equalized parts. Convergence length varies per
  // problem, so generate in chunks until each part has enough.
  {
    const TrainDataOptions gen_opt{cfg.gen.train_snr_db, cfg.gen.paired_supports};
    const int per_part = cfg.gen.rnn_sequences / cfg.gen.rnn_parts;
    if (per_part < 1) throw std::invalid_argument("gen-data: rnn_sequences < rnn_parts");
    std::vector<ResidualPairSet> parts;
    for (int part = 0; part < cfg.gen.rnn_parts; ++part) {
      ResidualPairSet acc;
      int chunk_index = 0;
      const int chunk = 64;
      while (static_cast<int>(acc.sequences.size()) < per_part) {
        RngState rng = RngState(cfg.seed)
                           .derive(0x726e6e)  // "rnn"
                           .derive(static_cast<uint64_t>(part) << 20 | chunk_index);
        ResidualPairSet piece = generate_residual_pairs(a, num_cols, k_eff, chunk,
                                                        cfg.gen.rnn_iters, rng, gen_opt);
        if (acc.sequences.empty()) {
          acc = std::move(piece);
        } else {
          acc.sequences.insert(acc.sequences.end(), piece.sequences.begin(),
                               piece.sequences.end());
          acc.planted.insert(acc.planted.end(), piece.planted.begin(), piece.planted.end());
        }
        if (++chunk_index > 1000)
          throw std::runtime_error("gen-data: residual generator starved");
      }
      acc.sequences.resize(static_cast<size_t>(per_part));
      acc.planted.resize(static_cast<size_t>(per_part));
      parts.push_back(std::move(acc));
    }
    save_residual_pairs(out_dir + "/rnn_sequences.bin", merge_equalized_parts(parts));
  }
}

void cmd_train(const ExperimentConfig& cfg, const std::string& kind,
               const std::string& dataset_path, const std::string& weights_out,
               const std::string& loss_csv_out) {
  std::vector<double> curve;
  if (kind == "mlp") {
    BlockPairSet set = load_block_pairs(dataset_path);
    // Datasets store physical residuals; networks train and run on unit-RMS
    // inputs so the tanh layers never saturate on high-power pilots.
    for (auto& p : set.pairs) p.input = normalize_input(std::move(p.input));
    const int d_in = set.m * set.K, d_out = set.n * set.K;
    RngState rng(cfg.train.adam.seed);
    MlpParams p = MlpParams::glorot(d_in, cfg.train.mlp_width, cfg.train.mlp_width,
                                    cfg.train.mlp_width, d_out, rng);
    curve = train_mlp(p, set.pairs, cfg.train.adam);
    save_mlp(weights_out, p);
  } else if (kind == "rnn") {
    ResidualPairSet set = load_residual_pairs(dataset_path);
    for (auto& s : set.sequences)
      for (auto& v : s.inputs) v = normalize_input(std::move(v));
    RngState rng(cfg.train.adam.seed);
    RnnParams p = RnnParams::glorot(set.m, cfg.train.rnn_hidden, set.n, rng);
    curve = train_rnn(p, set.sequences, cfg.train.adam);
    save_rnn(weights_out, p);
  } else {
    throw std::invalid_argument("cmd_train: kind must be mlp or rnn");
  }
  std::ofstream csv(loss_csv_out);
  if (!csv) throw std::runtime_error("cannot write " + loss_csv_out);
  csv << "epoch,mean_loss\n";
  for (size_t e = 0; e < curve.size(); ++e) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e, curve[e]);
    csv << buf;
  }
}

double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

namespace {

struct LoadedWeights {
  std::optional<MlpParams> mlp;
  std::optional<RnnParams> rnn;
};

double run_solver(const SolverConfig& sc, const LoadedWeights& weights,
                  const ChannelScene& scene, int* iterations) {
  const CsForm cs = to_cs_form(scene);
  const MmvProblem problem = scene_problem(cs, scene.sparsity);
  StoppingRule stop;
  stop.residual_threshold =
      scene.noiseless ? default_gamma(problem.y)
                      : scene.noise_sigma * std::sqrt(static_cast<double>(scene.y.rows()) *
                                                      scene.y.cols());

  auto finish = [&](const RecoveryResult& rec) {
    *iterations = rec.iterations;
    return nmse(estimate_from_xbar(scene, rec.x_hat), scene.h);
  };

  if (sc.name == "somp") {
    stop.max_iterations = sc.max_iterations > 0 ? sc.max_iterations : problem.k;
    return finish(somp(problem, stop));
  }
  if (sc.name == "sp") {
    stop.max_iterations = sc.max_iterations > 0 ? sc.max_iterations : 50;
    // Per-column subspace pursuit; columns assembled into one estimate.
    RecoveryResult all;
    all.x_hat = Mat(problem.a.cols, problem.y.cols);
    for (int c = 0; c < problem.y.cols; ++c) {
      MmvProblem col{problem.a, problem.y.col(c), problem.k};
      const RecoveryResult rec = subspace_pursuit(col, stop);
      all.x_hat.set_col(c, rec.x_hat.col(0));
      all.iterations += rec.iterations;
    }
    return finish(all);
  }
  if (sc.name == "glasso") {
    // Oracle lambda tuning: best NMSE over the grid, scaled by the largest
    // row norm of A^T Y.
    std::vector<double> grid = sc.lambda_grid;
    if (grid.empty()) grid = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1};
    const Mat aty = matmul(transpose(problem.a), problem.y);
    double lambda_max = 0.0;
    for (int i = 0; i < aty.rows; ++i) {
      double rn = 0.0;
      for (int c = 0; c < aty.cols; ++c) rn += aty(i, c) * aty(i, c);
      lambda_max = std::max(lambda_max, std::sqrt(rn));
    }
    double best = std::numeric_limits<double>::infinity();
    int best_iters = 0;
    for (double g : grid) {
      int iters = 0;
      const RecoveryResult rec = group_lasso(problem, g * lambda_max, sc.fista_iters);
      iters = rec.iterations;
      const double v = nmse(estimate_from_xbar(scene, rec.x_hat), scene.h);
      if (v < best) {
        best = v;
        best_iters = iters;
      }
    }
    *iterations = best_iters;
    return best;
  }
  if (sc.name == "alg1") {
    if (!weights.mlp) throw std::runtime_error("alg1: weights not loaded");
    stop.max_iterations = sc.max_iterations > 0 ? sc.max_iterations : 2 * problem.k;
    return finish(algorithm_one(problem, *weights.mlp, stop));
  }
  if (sc.name == "alg2") {
    if (!weights.rnn) throw std::runtime_error("alg2: weights not loaded");
    stop.max_iterations = sc.max_iterations > 0 ? sc.max_iterations : 50;
    return finish(algorithm_two(problem, *weights.rnn, stop));
  }
  throw std::invalid_argument("unknown solver: " + sc.name);
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ResultRow> cmd_run(const ExperimentConfig& cfg, const std::string& out_dir) {
  cfg.validate();

  // Weights load once, shared read-only across the sweep.
  std::vector<LoadedWeights> weights(cfg.solvers.size());
  for (size_t i = 0; i < cfg.solvers.size(); ++i) {
    const SolverConfig& sc = cfg.solvers[i];
    if (sc.name == "alg1") weights[i].mlp = load_mlp(sc.weights);
    if (sc.name == "alg2") weights[i].rnn = load_rnn(sc.weights);
  }

  std::vector<ResultRow> rows;
  for (double value : cfg.sweep_values) {
    const bool snr_axis = cfg.sweep_axis == "snr_db";
    const int t_pilots = snr_axis ? cfg.scene.t_pilots : static_cast<int>(value);
    const double snr_db = snr_axis ? value : cfg.scene.snr_db;

    RngState pilot_rng = RngState(cfg.pilot_seed).derive(static_cast<uint64_t>(t_pilots));
    SceneOptions opt;
    opt.pilot = make_pilot(cfg.scene.m_tx, t_pilots, cfg.scene.power_db, pilot_rng);

    for (int trial = 0; trial < cfg.trials; ++trial) {
      // Scene seed from (master seed, sweep value, trial) only, so every
      // solver sees the identical scene.
      uint64_t value_bits;
      static_assert(sizeof(value_bits) == sizeof(value));
      std::memcpy(&value_bits, &value, sizeof(value));
      const uint64_t scene_seed =
          RngState(cfg.seed).derive(value_bits).derive(static_cast<uint64_t>(trial)).next_u64();
      RngState scene_rng(scene_seed);
      const ChannelScene scene =
          generate_scene(cfg.scene.m_tx, cfg.scene.n_rx, t_pilots, cfg.scene.sparsity, snr_db,
                         cfg.scene.power_db, scene_rng, opt);

      for (size_t si = 0; si < cfg.solvers.size(); ++si) {
        ResultRow row;
        row.solver = cfg.solvers[si].name;
        row.sweep_axis = cfg.sweep_axis;
        row.sweep_value = value;
        row.trial = trial;
        row.seed = scene_seed;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          row.nmse = run_solver(cfg.solvers[si], weights[si], scene, &row.iterations);
        } catch (const std::exception& e) {
          row.error = e.what();
          row.nmse = std::numeric_limits<double>::quiet_NaN();
        }
        if (cfg.measure_walltime) {
          const auto t1 = std::chrono::steady_clock::now();
          row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        }
        rows.push_back(std::move(row));
      }
    }
  }

  std::ofstream data(out_dir + "/results.csv");
  if (!data) throw std::runtime_error("cannot write results.csv in " + out_dir);
  data << "solver,sweep_axis,sweep_value,trial,seed,nmse,iterations,wall_ms,error\n";
  for (const auto& r : rows) {
    data << r.solver << ',' << r.sweep_axis << ',' << format_double(r.sweep_value) << ','
         << r.trial << ',' << r.seed << ','
         << (std::isnan(r.nmse) ? std::string() : format_double(r.nmse)) << ',' << r.iterations
         << ',' << format_double(r.wall_ms) << ',' << r.error << '\n';
  }

  std::ofstream summary(out_dir + "/summary.csv");
  if (!summary) throw std::runtime_error("cannot write summary.csv in " + out_dir);
  summary << "solver,sweep_axis,sweep_value,trials,median_nmse,mean_nmse\n";
  for (double value : cfg.sweep_values) {
    for (const auto& sc : cfg.solvers) {
      std::vector<double> vals;
      for (const auto& r : rows)
        if (r.solver == sc.name && r.sweep_value == value && r.error.empty())
          vals.push_back(r.nmse);
      if (vals.empty()) continue;
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= static_cast<double>(vals.size());
      summary << sc.name << ',' << cfg.sweep_axis << ',' << format_double(value) << ','
              << vals.size() << ',' << format_double(median(vals)) << ','
              << format_double(mean) << '\n';
    }
  }
  return rows;
}

}  // namespace mmv
