// Command-line front end: dataset preparation, training runs, ablation
// sweeps, hyperparameter grids, and checkpoint evaluation. Results go to
// files; diagnostics go to stderr; exit status 0 iff no error.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mtd/errors.hpp"
#include "mtd/experiment.hpp"
#include "mtd/io.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw mtd::LoadError(path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Pre-scan for --config so flag defaults come from the file and explicit
// flags still win.
mtd::ExperimentConfig load_base_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      return mtd::ExperimentConfig::from_json(read_file(argv[i + 1]));
    }
  }
  return mtd::ExperimentConfig{};
}

void add_common_train_flags(CLI::App* cmd, mtd::ExperimentConfig& cfg) {
  cmd->add_option("--config", "JSON config file; explicit flags override its values")
      ->type_name("FILE");
  cmd->add_option("--lr", cfg.train.learning_rate, "SGD learning rate (default 0.1)");
  cmd->add_option("--momentum", cfg.train.momentum, "SGD momentum (default 0.9)");
  cmd->add_option("--weight-decay", cfg.train.weight_decay, "L2 penalty (default 0)");
  cmd->add_option("--batch-size", cfg.train.batch_size, "mini-batch size (default 128)");
  cmd->add_option("--epochs", cfg.train.epochs, "training epochs (default 100)");
  cmd->add_option("--alpha", cfg.train.weights.alpha,
                  "graph regularization weight (default 0.4)");
  cmd->add_option("--beta", cfg.train.weights.beta, "contrastive weight (default 0.4)");
  cmd->add_option("--gamma", cfg.train.weights.gamma, "reconstruction weight (default 0.1)");
  cmd->add_option("--sigma", cfg.train.mask_rate, "fragment mask rate (default 0.25)");
  cmd->add_option("--eta", cfg.train.eta, "similarity graph constant (default 100)");
  cmd->add_option("--seed", cfg.train.seed, "training seed (default 0)");
  cmd->add_option("--eval-every", cfg.train.eval_every,
                  "epochs between test evaluations; 0 = final only (default 10)");
  cmd->add_option("--embed-dim", cfg.embed_dim, "embedding width d_e (default 128)");
  cmd->add_option("--hidden", cfg.hidden_widths, "encoder hidden widths (default 256)");
  cmd->add_option("--classifier-input", cfg.classifier_input,
                  "classifier input: gated | concat (default gated)");
}

}  // namespace

int main(int argc, char** argv) {
  mtd::ExperimentConfig cfg;
  try {
    cfg = load_base_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }

  CLI::App app{"Incomplete multi-view weak multi-label training toolkit"};
  app.require_subcommand(1);

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "Build prepared dataset directories (simulated missing views/labels + split)");
  std::size_t syn_n = 600, syn_m = 2, syn_c = 5, syn_latent = 8;
  std::vector<std::size_t> syn_dims;
  double syn_noise = 0.25;
  bool use_synthetic = false;
  prepare->add_option("--config", "JSON config file; explicit flags override its values")
      ->type_name("FILE");
  prepare->add_option("--source", cfg.dataset_dir, "existing complete dataset directory");
  prepare->add_flag("--synthetic", use_synthetic, "generate a synthetic dataset instead");
  prepare->add_option("--n", syn_n, "synthetic: sample count (default 600)");
  prepare->add_option("--views", syn_m, "synthetic: view count (default 2)");
  prepare->add_option("--categories", syn_c, "synthetic: category count (default 5)");
  prepare->add_option("--view-dims", syn_dims, "synthetic: per-view dimensions");
  prepare->add_option("--latent-dim", syn_latent, "synthetic: latent width (default 8)");
  prepare->add_option("--noise", syn_noise, "synthetic: view noise stddev (default 0.25)");
  prepare->add_option("--view-missing-rate", cfg.incompleteness.view_missing_rate,
                      "fraction of instances hidden per view (default 0.5)");
  prepare->add_option("--label-missing-rate", cfg.incompleteness.label_missing_rate,
                      "fraction of tags hidden per category (default 0.5)");
  prepare->add_option("--train-ratio", cfg.split.train_ratio,
                      "training fraction of samples (default 0.7)");
  prepare->add_option("--repeat", cfg.repeat, "independent prepared copies (default 1)");
  prepare->add_option("--base-seed", cfg.base_seed, "seed for all randomness (default 0)");
  prepare->add_option("--out", cfg.output_dir, "output directory (default runs)");

  // train
  auto* train_cmd = app.add_subcommand("train", "Train on a prepared dataset directory");
  std::string train_data, train_out = "runs/train";
  train_cmd->add_option("--data", train_data, "prepared dataset directory")->required();
  train_cmd->add_option("--out", train_out, "output directory for run artifacts");
  add_common_train_flags(train_cmd, cfg);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Train ablation variants over several seeds");
  std::string ablate_data, ablate_out = "runs/ablation";
  std::vector<std::string> variants = {"full", "single_channel", "no_mask"};
  std::size_t ablate_seeds = 1;
  ablate->add_option("--data", ablate_data, "prepared dataset directory")->required();
  ablate->add_option("--variants", variants,
                     "subset of: full single_channel no_mask no_gc no_re no_ccc");
  ablate->add_option("--seeds", ablate_seeds, "number of consecutive seeds (default 1)");
  ablate->add_option("--out", ablate_out, "output directory");
  add_common_train_flags(ablate, cfg);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "Cartesian hyperparameter grid");
  std::string sweep_data, sweep_out = "runs/sweep";
  mtd::SweepGrids grids;
  std::size_t sweep_seeds = 1;
  sweep->add_option("--data", sweep_data, "prepared dataset directory")->required();
  sweep->add_option("--alpha-grid", grids.alpha, "alpha values");
  sweep->add_option("--beta-grid", grids.beta, "beta values");
  sweep->add_option("--gamma-grid", grids.gamma, "gamma values");
  sweep->add_option("--sigma-grid", grids.sigma, "mask rate values");
  sweep->add_option("--seeds", sweep_seeds, "runs per grid point (default 1)");
  sweep->add_option("--out", sweep_out, "output directory");
  add_common_train_flags(sweep, cfg);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a prepared dataset");
  std::string eval_checkpoint, eval_data, eval_out, heatmap_out;
  long long heatmap_sample = -1;
  eval_cmd->add_option("--checkpoint", eval_checkpoint, "model checkpoint path")->required();
  eval_cmd->add_option("--data", eval_data, "prepared dataset directory")->required();
  eval_cmd->add_option("--out", eval_out, "write the metric row to this CSV file");
  eval_cmd->add_option("--heatmap-sample", heatmap_sample,
                       "also emit the 2m x 2m channel cosine-similarity matrix of this test "
                       "sample (shared channels first, then proprietary)");
  eval_cmd->add_option("--heatmap-out", heatmap_out,
                       "output CSV for --heatmap-sample (default heatmap.csv)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*prepare) {
      if (use_synthetic) {
        mtd::SyntheticSpec spec;
        spec.n = syn_n;
        spec.m = syn_m;
        spec.c = syn_c;
        spec.view_dims = syn_dims;
        spec.latent_dim = syn_latent;
        spec.noise = syn_noise;
        cfg.synthetic = spec;
        cfg.dataset_dir.clear();
      }
      const auto dirs = mtd::prepare_datasets(cfg);
      for (const auto& d : dirs) std::cout << d << "\n";
    } else if (*train_cmd) {
      const auto artifacts = mtd::run_training(train_data, cfg, train_out);
      std::cout << artifacts.run_json_path << "\n";
    } else if (*ablate) {
      const std::string summary =
          mtd::run_ablation_experiment(ablate_data, cfg, variants, ablate_seeds, ablate_out);
      std::cout << summary << "\n";
    } else if (*sweep) {
      const std::string path = mtd::run_sweep(sweep_data, cfg, grids, sweep_seeds, sweep_out);
      std::cout << path << "\n";
    } else if (*eval_cmd) {
      const mtd::MetricsReport report = mtd::evaluate_checkpoint(eval_checkpoint, eval_data);
      const std::string text =
          mtd::MetricsReport::csv_header() + "\n" + report.csv_row() + "\n";
      if (!eval_out.empty()) {
        std::ofstream out(eval_out, std::ios::binary);
        if (!out) throw mtd::LoadError(eval_out + ": cannot open for writing");
        out << text;
        std::cout << eval_out << "\n";
      } else {
        std::cout << text;
      }
      if (heatmap_sample >= 0) {
        const mtd::MtdModel model = mtd::load_model(eval_checkpoint);
        const mtd::PreparedData data = mtd::load_prepared(eval_data);
        const mtd::Matrix heat =
            mtd::channel_similarity(model, data.test.views, data.test.view_index,
                                    static_cast<std::size_t>(heatmap_sample));
        const std::string path = heatmap_out.empty() ? "heatmap.csv" : heatmap_out;
        mtd::write_csv_matrix(path, heat);
        std::cout << path << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
