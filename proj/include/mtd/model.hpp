#ifndef MTD_MODEL_HPP
#define MTD_MODEL_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "mtd/matrix.hpp"
#include "mtd/tape.hpp"

namespace mtd {

enum class Activation { Linear, Relu, Sigmoid };

// One MLP channel: layer widths input -> hidden... -> output.
struct MlpSpec {
  std::vector<std::size_t> widths;
  Activation hidden = Activation::Relu;
  Activation output = Activation::Linear;
};

// How the classifier consumes the fused features: the gated fusion (width
// d_e) or the concatenation of fused shared and proprietary features (2*d_e).
enum class ClassifierInput { Gated, Concat };

struct ModelConfig {
  std::vector<std::size_t> view_dims;
  std::size_t embed_dim = 512;
  std::size_t num_labels = 0;
  std::vector<std::size_t> hidden_widths = {512, 512};
  Activation hidden_activation = Activation::Relu;
  ClassifierInput classifier_input = ClassifierInput::Gated;
  // Ablation baseline: one encoder per view, fused shared features used
  // directly (no proprietary channel, no gate).
  bool single_channel = false;

  std::size_t classifier_in_dim() const {
    return classifier_input == ClassifierInput::Concat && !single_channel ? 2 * embed_dim
                                                                          : embed_dim;
  }
};

struct Mlp {
  std::vector<Matrix> weights;  // layer k: widths[k] x widths[k+1]
  std::vector<Matrix> biases;   // 1 x widths[k+1], broadcast over rows
  MlpSpec spec;
};

// All learnable parameters: per view a shared encoder, a proprietary encoder
// (same architecture), and a decoder mapping embeddings back to the view
// space; plus the linear classifier.
struct MtdModel {
  ModelConfig config;
  std::vector<Mlp> shared_encoders;
  std::vector<Mlp> private_encoders;  // empty in single-channel mode
  std::vector<Mlp> decoders;
  Matrix classifier_weight;  // classifier_in_dim x c
  Matrix classifier_bias;    // 1 x c

  // Visits every parameter matrix in checkpoint order: shared encoders by
  // view, private encoders by view, decoders by view, classifier weight,
  // classifier bias. Each MLP contributes W0, b0, W1, b1, ...
  void for_each_parameter(const std::function<void(Matrix&)>& fn);
  void for_each_parameter(const std::function<void(const Matrix&)>& fn) const;
  std::size_t parameter_count() const;
};

// Glorot-uniform weights, zero biases; deterministic per seed.
MtdModel init_model(const ModelConfig& config, std::uint64_t seed);

// Parameter leaves bound onto a tape, in for_each_parameter order.
struct BoundMlp {
  std::vector<Value> weights;
  std::vector<Value> biases;
};

struct BoundModel {
  std::vector<BoundMlp> shared_encoders;
  std::vector<BoundMlp> private_encoders;
  std::vector<BoundMlp> decoders;
  Value classifier_weight;
  Value classifier_bias;
  std::vector<Value> flat;  // same order as for_each_parameter
};

BoundModel bind_parameters(Tape& tape, const MtdModel& model);

Value mlp_apply(const BoundMlp& mlp, const MlpSpec& spec, Value input);

// Per-batch products of one forward pass.
struct ForwardOutputs {
  std::vector<Value> shared;       // S^(v), b x d_e
  std::vector<Value> proprietary;  // O^(v), b x d_e (empty in single-channel)
  Value fused_shared;              // availability-weighted mean over views
  Value fused_proprietary;
  Value z;                         // gated fusion (= fused_shared when single-channel)
  std::vector<Value> reconstructed;  // decoder outputs, b x d_v
  Value predictions;               // P, b x c, sigmoid scores
};

// Encoders applied to every view. Missing instances are still transformed;
// the fusion weights and all loss gates annihilate their contribution.
std::pair<std::vector<Value>, std::vector<Value>> encode(Tape& tape, const MtdModel& model,
                                                         const BoundModel& bound,
                                                         const std::vector<Matrix>& inputs);

// Availability-weighted mean over views. Every batch row needs at least one
// available view.
Value fuse(Tape& tape, const std::vector<Value>& per_view, const Matrix& view_index);

// Z = sigmoid(fused_proprietary) (x) fused_shared.
Value gate_fuse(Value fused_shared, Value fused_proprietary);

// Decoders applied to S^(v) + O^(v) (just S^(v) in single-channel mode).
std::vector<Value> decode(const MtdModel& model, const BoundModel& bound,
                          const std::vector<Value>& shared,
                          const std::vector<Value>& proprietary);

Value classify(const MtdModel& model, const BoundModel& bound, Value features);

// Full differentiable pipeline on (possibly masked) inputs.
ForwardOutputs forward(Tape& tape, const MtdModel& model, const BoundModel& bound,
                       const std::vector<Matrix>& inputs, const Matrix& view_index);

// Inference on unmasked inputs; returns the score matrix P.
Matrix predict(const MtdModel& model, const std::vector<Matrix>& views,
               const Matrix& view_index);

// 2m x 2m cosine-similarity matrix between one sample's channel features
// (shared features of every view, then proprietary features of every view).
// This is the data behind the channel-similarity heat maps.
Matrix channel_similarity(const MtdModel& model, const std::vector<Matrix>& views,
                          const Matrix& view_index, std::size_t sample);

// Checkpoint: magic "MTDC", u32 format version, a manifest of counts and
// shapes, then every parameter matrix as an MVF1 record in
// for_each_parameter order.
void save_model(const std::string& path, const MtdModel& model);
MtdModel load_model(const std::string& path);

}  // namespace mtd

#endif  // MTD_MODEL_HPP
