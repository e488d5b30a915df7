#include <cstdio>
#include <exception>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "mmv/data_gen.hpp"
#include "mmv/harness.hpp"
#include "mmv/neural.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Jointly-sparse MMV recovery and massive-MIMO channel estimation experiments"};
  app.require_subcommand(1);

  std::string config_path = "configs/default.json";
  std::string out_dir;
  long seed_override = -1;
  app.add_option("-c,--config", config_path, "experiment config (JSON)");
  auto* out_opt = app.add_option("-o,--output-dir", out_dir, "output directory (default: config's output_dir)");
  app.add_option("--seed", seed_override, "override the config's master seed");

  auto* gen = app.add_subcommand("gen-data", "generate the MLP and RNN training datasets");
  bool gen_csv = false;
  gen->add_flag("--csv", gen_csv, "also export datasets as CSV for inspection");

  auto* train = app.add_subcommand("train", "train a network on a generated dataset");
  std::string kind, dataset, weights_out, loss_csv;
  train->add_option("--kind", kind, "mlp or rnn")->required();
  train->add_option("--data", dataset, "dataset file from gen-data")->required();
  train->add_option("--out", weights_out, "weight file to write")->required();
  train->add_option("--loss-csv", loss_csv, "loss curve CSV (default: <out>.loss.csv)");

  auto* run = app.add_subcommand("run", "run the configured sweep and write results CSVs");

  auto* inspect = app.add_subcommand("inspect-weights", "print a weight file's layout");
  std::string inspect_path;
  inspect->add_option("file", inspect_path, "weight file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (inspect->parsed()) {
      const auto [wkind, shapes] = mmv::inspect_weights(inspect_path);
      std::printf("kind: %s\n", wkind == 1 ? "mlp" : wkind == 2 ? "rnn" : "unknown");
      for (size_t i = 0; i < shapes.size(); ++i)
        std::printf("matrix %zu: %u x %u\n", i, shapes[i].first, shapes[i].second);
      return 0;
    }

    mmv::ExperimentConfig cfg;
    try {
      cfg = mmv::load_config(config_path);
      if (seed_override >= 0) cfg.seed = static_cast<uint64_t>(seed_override);
    } catch (const std::invalid_argument& e) {
      std::fprintf(stderr, "config error: %s\n", e.what());
      return 1;
    }
    if (out_opt->count() == 0) out_dir = cfg.output_dir;
    std::filesystem::create_directories(out_dir);

    if (gen->parsed()) {
      mmv::cmd_gen_data(cfg, out_dir);
      if (gen_csv) {
        mmv::export_block_pairs_csv(out_dir + "/mlp_pairs.csv",
                                    mmv::load_block_pairs(out_dir + "/mlp_pairs.bin"));
        mmv::export_residual_pairs_csv(out_dir + "/rnn_sequences.csv",
                                       mmv::load_residual_pairs(out_dir + "/rnn_sequences.bin"));
      }
      std::printf("datasets written to %s\n", out_dir.c_str());
    } else if (train->parsed()) {
      if (loss_csv.empty()) loss_csv = weights_out + ".loss.csv";
      mmv::cmd_train(cfg, kind, dataset, weights_out, loss_csv);
      std::printf("weights written to %s\n", weights_out.c_str());
    } else if (run->parsed()) {
      const auto rows = mmv::cmd_run(cfg, out_dir);
      std::printf("%zu result rows written to %s/results.csv\n", rows.size(), out_dir.c_str());
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
