#ifndef MTD_TRAINER_HPP
#define MTD_TRAINER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "mtd/dataset.hpp"
#include "mtd/losses.hpp"
#include "mtd/metrics.hpp"
#include "mtd/model.hpp"

namespace mtd {

struct TrainConfig {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 0.0;
  std::size_t batch_size = 128;
  std::size_t epochs = 100;
  LossWeights weights;        // alpha 0.4, beta 0.4, gamma 0.1
  double mask_rate = 0.25;    // sigma
  double eta = 100.0;         // similarity graph constant
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;  // 0 = final evaluation only
  bool inclusive_fragment = false;
  bool contrastive_batch_sum = false;

  void validate() const;
};

struct EvaluationPoint {
  std::size_t epoch = 0;  // 1-based; equal to epochs for the final report
  MetricsReport report;
};

struct RunRecord {
  TrainConfig config;
  std::vector<LossBreakdown> per_epoch_losses;  // batch means per epoch
  std::vector<double> epoch_seconds;            // wall clock per epoch
  std::vector<EvaluationPoint> evaluations;
  std::string checkpoint_path;  // empty until the caller saves one
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
};

// Classical SGD with momentum: v <- mu*v - lr*g; p <- p + v. Exposed so the
// update rule can be driven directly in tests.
class SgdOptimizer {
public:
  SgdOptimizer(double learning_rate, double momentum, double weight_decay = 0.0);

  // `params` and `grads` are matched spans over parameter matrices.
  void step(std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads);

  const std::vector<Matrix>& velocities() const { return velocity_; }

private:
  double learning_rate_;
  double momentum_;
  double weight_decay_;
  std::vector<Matrix> velocity_;  // lazily shaped on first step
};

// One epoch: rebuild fragment masks, apply them, then per shuffled batch run
// the forward pass, assemble the four losses, backpropagate and update.
// Deterministic end-to-end for a fixed seed. Evaluates on `test` every
// eval_every epochs (and always after the last) when a test split is given.
RunRecord train(const MultiViewDataset& train_data, MtdModel& model, const TrainConfig& config,
                const MultiViewDataset* test_data = nullptr);

// Inference on unmasked inputs (respecting the view index), then all six
// metrics against the split's complete labels.
MetricsReport evaluate(const MtdModel& model, const MultiViewDataset& test_data);

// Ablation variants: "full", "single_channel", "no_mask", "no_gc", "no_re",
// "no_ccc". Unknown names throw.
struct AblationRun {
  std::string variant;
  TrainConfig effective_config;
  ModelConfig effective_model;
  MetricsReport report;
};

std::vector<AblationRun> run_ablation(const MultiViewDataset& train_data,
                                      const MultiViewDataset& test_data,
                                      const ModelConfig& model_config, const TrainConfig& config,
                                      const std::vector<std::string>& variants);

}  // namespace mtd

#endif  // MTD_TRAINER_HPP
