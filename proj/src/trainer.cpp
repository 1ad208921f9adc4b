#include "mtd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "mtd/errors.hpp"
#include "mtd/graph_reg.hpp"
#include "mtd/masking.hpp"
#include "mtd/rng.hpp"
#include "mtd/tape.hpp"

namespace mtd {

void TrainConfig::validate() const {
  if (learning_rate < 0.0) throw ContractError("train: learning rate must be >= 0");
  if (momentum < 0.0 || momentum >= 1.0) throw ContractError("train: momentum must lie in [0, 1)");
  if (batch_size == 0) throw ContractError("train: batch size must be positive");
  if (epochs == 0) throw ContractError("train: epochs must be >= 1");
  if (mask_rate < 0.0 || mask_rate >= 1.0) throw ContractError("train: mask rate must lie in [0, 1)");
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0) {
    throw ContractError("train: loss weights must be nonnegative");
  }
}

SgdOptimizer::SgdOptimizer(double learning_rate, double momentum, double weight_decay)
    : learning_rate_(learning_rate), momentum_(momentum), weight_decay_(weight_decay) {}

void SgdOptimizer::step(std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
  if (params.size() != grads.size()) {
    throw ContractError("sgd: " + std::to_string(params.size()) + " parameters vs " +
                        std::to_string(grads.size()) + " gradients");
  }
  if (velocity_.empty()) {
    velocity_.reserve(params.size());
    for (const Matrix* p : params) velocity_.emplace_back(p->rows(), p->cols());
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Matrix& p = *params[k];
    const Matrix& g = *grads[k];
    Matrix& v = velocity_[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      double grad = g.data()[i];
      if (weight_decay_ != 0.0) grad += weight_decay_ * p.data()[i];
      v.data()[i] = momentum_ * v.data()[i] - learning_rate_ * grad;
      p.data()[i] += v.data()[i];
    }
  }
}

namespace {

Matrix gather_rows(const Matrix& src, const std::vector<std::size_t>& rows, std::size_t begin,
                   std::size_t end) {
  Matrix out(end - begin, src.cols());
  for (std::size_t i = begin; i < end; ++i)
    for (std::size_t j = 0; j < src.cols(); ++j) out(i - begin, j) = src(rows[i], j);
  return out;
}

struct BatchLosses {
  Value total;
  LossBreakdown breakdown;
};

BatchLosses batch_losses(Tape& tape, const MtdModel& model, const BoundModel& bound,
                         const std::vector<Matrix>& masked_views,
                         const std::vector<Matrix>& raw_views, const Matrix& w_batch,
                         const Matrix& y_batch, const Matrix& g_batch, const TrainConfig& cfg) {
  ForwardOutputs out = forward(tape, model, bound, masked_views, w_batch);
  Value l_mc = classification_loss(out.predictions, y_batch, g_batch);
  SimilarityGraph graph = build_graph(y_batch, g_batch, cfg.eta);
  Value l_gc = graph_loss(out.z, graph);
  Value l_ccc = model.config.single_channel
                    ? tape.leaf(Matrix(1, 1))
                    : contrastive_loss(out.shared, out.proprietary, w_batch,
                                       cfg.contrastive_batch_sum);
  Value l_re = reconstruction_loss(out.reconstructed, raw_views, w_batch);
  auto [total, breakdown] = total_loss(l_mc, l_gc, l_ccc, l_re, cfg.weights);
  return {total, breakdown};
}

}  // namespace

RunRecord train(const MultiViewDataset& train_data, MtdModel& model, const TrainConfig& config,
                const MultiViewDataset* test_data) {
  config.validate();
  train_data.validate();
  const std::size_t n = train_data.num_samples();
  if (n == 0) throw ContractError("train: empty training split");
  if (train_data.num_views() != model.config.view_dims.size()) {
    throw ShapeError("train: dataset has " + std::to_string(train_data.num_views()) +
                     " views, model expects " + std::to_string(model.config.view_dims.size()));
  }

  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.config = config;
  record.seed = config.seed;

  Rng run_rng(config.seed);
  SgdOptimizer optimizer(config.learning_rate, config.momentum, config.weight_decay);
  const std::vector<std::size_t> dims = train_data.view_dims();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto epoch_started = std::chrono::steady_clock::now();
    // fragment masks are rebuilt once per epoch, before any batch
    MaskSpec mask_spec{config.mask_rate, Rng::mix_seed(config.seed, epoch),
                       config.inclusive_fragment};
    const MaskSet masks = build_masks(n, dims, mask_spec);
    const std::vector<Matrix> masked_views = apply_masks(train_data.views, masks);

    Rng epoch_rng = run_rng.fork(epoch);
    epoch_rng.shuffle(order);

    LossBreakdown epoch_mean;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < n; begin += config.batch_size) {
      const std::size_t end = std::min(begin + config.batch_size, n);
      std::vector<Matrix> masked_batch, raw_batch;
      for (std::size_t v = 0; v < dims.size(); ++v) {
        masked_batch.push_back(gather_rows(masked_views[v], order, begin, end));
        raw_batch.push_back(gather_rows(train_data.views[v], order, begin, end));
      }
      const Matrix w_batch = gather_rows(train_data.view_index, order, begin, end);
      const Matrix y_batch = gather_rows(train_data.labels, order, begin, end);
      const Matrix g_batch = gather_rows(train_data.label_index, order, begin, end);

      Tape tape;
      BoundModel bound = bind_parameters(tape, model);
      BatchLosses losses;
      try {
        losses = batch_losses(tape, model, bound, masked_batch, raw_batch, w_batch, y_batch,
                              g_batch, config);
      } catch (const NumericError& e) {
        throw TrainError("train: epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batches + 1) + ": " + e.what());
      }
      if (!std::isfinite(losses.breakdown.total)) {
        throw TrainError("train: non-finite loss at epoch " + std::to_string(epoch) +
                         ", batch " + std::to_string(batches + 1));
      }
      tape.backward(losses.total);

      std::vector<Matrix*> params;
      std::vector<const Matrix*> grads;
      params.reserve(bound.flat.size());
      grads.reserve(bound.flat.size());
      model.for_each_parameter([&params](Matrix& p) { params.push_back(&p); });
      for (const Value& leaf : bound.flat) grads.push_back(&leaf.grad());
      optimizer.step(params, grads);

      epoch_mean.classification += losses.breakdown.classification;
      epoch_mean.graph += losses.breakdown.graph;
      epoch_mean.contrastive += losses.breakdown.contrastive;
      epoch_mean.reconstruction += losses.breakdown.reconstruction;
      epoch_mean.total += losses.breakdown.total;
      ++batches;
    }
    const double inv = 1.0 / static_cast<double>(batches);
    epoch_mean.classification *= inv;
    epoch_mean.graph *= inv;
    epoch_mean.contrastive *= inv;
    epoch_mean.reconstruction *= inv;
    epoch_mean.total *= inv;
    record.per_epoch_losses.push_back(epoch_mean);
    record.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - epoch_started).count());

    if (test_data != nullptr) {
      const bool scheduled = config.eval_every != 0 && epoch % config.eval_every == 0;
      if (scheduled || epoch == config.epochs) {
        record.evaluations.push_back({epoch, evaluate(model, *test_data)});
      }
    }
  }

  record.wall_clock_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return record;
}

MetricsReport evaluate(const MtdModel& model, const MultiViewDataset& test_data) {
  const Matrix scores = predict(model, test_data.views, test_data.view_index);
  return compute_metrics(scores, test_data.labels);
}

std::vector<AblationRun> run_ablation(const MultiViewDataset& train_data,
                                      const MultiViewDataset& test_data,
                                      const ModelConfig& model_config, const TrainConfig& config,
                                      const std::vector<std::string>& variants) {
  std::vector<AblationRun> runs;
  for (const std::string& name : variants) {
    AblationRun run;
    run.variant = name;
    run.effective_config = config;
    run.effective_model = model_config;
    if (name == "full") {
      // defaults as given
    } else if (name == "single_channel") {
      run.effective_model.single_channel = true;
      run.effective_config.weights.beta = 0.0;
    } else if (name == "no_mask") {
      run.effective_config.mask_rate = 0.0;
    } else if (name == "no_gc") {
      run.effective_config.weights.alpha = 0.0;
    } else if (name == "no_re") {
      run.effective_config.weights.gamma = 0.0;
    } else if (name == "no_ccc") {
      run.effective_config.weights.beta = 0.0;
    } else {
      throw ContractError("run_ablation: unknown variant '" + name + "'");
    }
    MtdModel model = init_model(run.effective_model, run.effective_config.seed);
    train(train_data, model, run.effective_config, nullptr);
    run.report = evaluate(model, test_data);
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace mtd
