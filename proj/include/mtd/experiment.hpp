#ifndef MTD_EXPERIMENT_HPP
#define MTD_EXPERIMENT_HPP

#include <optional>
#include <string>
#include <vector>

#include "mtd/dataset.hpp"
#include "mtd/model.hpp"
#include "mtd/trainer.hpp"

namespace mtd {

// Everything a batch run needs; every field has a default except the dataset
// source. Serializable to/from JSON so reports are self-describing.
struct ExperimentConfig {
  std::string dataset_dir;                 // prepared dataset directory
  std::optional<SyntheticSpec> synthetic;  // used when dataset_dir is empty
  IncompletenessSpec incompleteness;
  SplitSpec split;
  TrainConfig train;
  std::size_t embed_dim = 128;
  std::vector<std::size_t> hidden_widths = {256};
  std::string classifier_input = "gated";  // or "concat"
  std::size_t repeat = 1;
  std::uint64_t base_seed = 0;
  std::string output_dir = "runs";

  std::string to_json() const;
  static ExperimentConfig from_json(const std::string& text);

  ModelConfig model_config(const std::vector<std::size_t>& view_dims,
                           std::size_t num_labels) const;
};

// Builds (or loads) the complete dataset, simulates incompleteness, splits,
// and writes one prepared directory per repeat: views, weak labels, w/g
// indices, full labels, and a split manifest echoing rates and indices.
std::vector<std::string> prepare_datasets(const ExperimentConfig& config);

struct PreparedData {
  MultiViewDataset train;
  MultiViewDataset test;
};

// Loads a prepared directory and applies its split manifest.
PreparedData load_prepared(const std::string& dir);

struct TrainArtifacts {
  RunRecord record;
  std::string run_json_path;
  std::string losses_csv_path;
  std::string metrics_csv_path;
  std::string checkpoint_path;
};

// Trains on a prepared directory, evaluates on schedule, and writes
// run.json, losses.csv, metrics.csv, and checkpoint.mtdc under out_dir.
TrainArtifacts run_training(const std::string& prepared_dir, const ExperimentConfig& config,
                            const std::string& out_dir);

// Runs the variant set over `seeds` consecutive seeds starting at the
// configured train seed; writes per-run rows plus a mean/std summary CSV in
// the six-metric column order.
std::string run_ablation_experiment(const std::string& prepared_dir,
                                    const ExperimentConfig& config,
                                    const std::vector<std::string>& variants, std::size_t seeds,
                                    const std::string& out_dir);

struct SweepGrids {
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;
  std::vector<double> sigma;
};

// Cartesian product of the non-empty grids times `seeds` runs; emits a
// long-form CSV (one row per run: parameter values, seed, metrics).
std::string run_sweep(const std::string& prepared_dir, const ExperimentConfig& config,
                      const SweepGrids& grids, std::size_t seeds, const std::string& out_dir);

// Loads a checkpoint and a prepared dataset, evaluates on its test split.
MetricsReport evaluate_checkpoint(const std::string& checkpoint_path,
                                  const std::string& prepared_dir);

std::string losses_to_csv(const std::vector<LossBreakdown>& losses);
std::string run_record_to_json(const RunRecord& record, const ExperimentConfig& config,
                               const std::string& checkpoint_path);

}  // namespace mtd

#endif  // MTD_EXPERIMENT_HPP
