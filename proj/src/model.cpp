#include "mtd/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "mtd/errors.hpp"
#include "mtd/io.hpp"
#include "mtd/rng.hpp"

namespace mtd {

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;
constexpr char kCheckpointMagic[4] = {'M', 'T', 'D', 'C'};

MlpSpec encoder_spec(const ModelConfig& cfg, std::size_t view) {
  MlpSpec spec;
  spec.widths.push_back(cfg.view_dims[view]);
  spec.widths.insert(spec.widths.end(), cfg.hidden_widths.begin(), cfg.hidden_widths.end());
  spec.widths.push_back(cfg.embed_dim);
  spec.hidden = cfg.hidden_activation;
  spec.output = Activation::Linear;
  return spec;
}

MlpSpec decoder_spec(const ModelConfig& cfg, std::size_t view) {
  MlpSpec spec;
  spec.widths.push_back(cfg.embed_dim);
  spec.widths.insert(spec.widths.end(), cfg.hidden_widths.rbegin(), cfg.hidden_widths.rend());
  spec.widths.push_back(cfg.view_dims[view]);
  spec.hidden = cfg.hidden_activation;
  spec.output = Activation::Linear;
  return spec;
}

Mlp init_mlp(const MlpSpec& spec, Rng& rng) {
  Mlp mlp;
  mlp.spec = spec;
  for (std::size_t k = 0; k + 1 < spec.widths.size(); ++k) {
    const std::size_t fan_in = spec.widths[k], fan_out = spec.widths[k + 1];
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    mlp.weights.push_back(Matrix::uniform(fan_in, fan_out, -bound, bound, rng));
    mlp.biases.push_back(Matrix(1, fan_out));
  }
  return mlp;
}

Value activate(Value x, Activation kind) {
  switch (kind) {
    case Activation::Relu: return relu(x);
    case Activation::Sigmoid: return sigmoid(x);
    default: return x;
  }
}

void for_each_in(std::vector<Mlp>& mlps, const std::function<void(Matrix&)>& fn) {
  for (Mlp& mlp : mlps) {
    for (std::size_t k = 0; k < mlp.weights.size(); ++k) {
      fn(mlp.weights[k]);
      fn(mlp.biases[k]);
    }
  }
}

}  // namespace

void MtdModel::for_each_parameter(const std::function<void(Matrix&)>& fn) {
  for_each_in(shared_encoders, fn);
  for_each_in(private_encoders, fn);
  for_each_in(decoders, fn);
  fn(classifier_weight);
  fn(classifier_bias);
}

void MtdModel::for_each_parameter(const std::function<void(const Matrix&)>& fn) const {
  const_cast<MtdModel*>(this)->for_each_parameter(
      [&fn](Matrix& m) { fn(static_cast<const Matrix&>(m)); });
}

std::size_t MtdModel::parameter_count() const {
  std::size_t count = 0;
  for_each_parameter([&count](const Matrix&) { ++count; });
  return count;
}

MtdModel init_model(const ModelConfig& config, std::uint64_t seed) {
  if (config.view_dims.empty()) throw ContractError("init_model: no view dimensions");
  if (config.num_labels == 0) throw ContractError("init_model: num_labels must be positive");
  Rng rng(seed);
  MtdModel model;
  model.config = config;
  for (std::size_t v = 0; v < config.view_dims.size(); ++v) {
    model.shared_encoders.push_back(init_mlp(encoder_spec(config, v), rng));
  }
  if (!config.single_channel) {
    for (std::size_t v = 0; v < config.view_dims.size(); ++v) {
      model.private_encoders.push_back(init_mlp(encoder_spec(config, v), rng));
    }
  }
  for (std::size_t v = 0; v < config.view_dims.size(); ++v) {
    model.decoders.push_back(init_mlp(decoder_spec(config, v), rng));
  }
  const std::size_t in_dim = config.classifier_in_dim();
  const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + config.num_labels));
  model.classifier_weight = Matrix::uniform(in_dim, config.num_labels, -bound, bound, rng);
  model.classifier_bias = Matrix(1, config.num_labels);
  return model;
}

BoundModel bind_parameters(Tape& tape, const MtdModel& model) {
  BoundModel bound;
  auto bind_group = [&tape, &bound](const std::vector<Mlp>& mlps) {
    std::vector<BoundMlp> out;
    for (const Mlp& mlp : mlps) {
      BoundMlp b;
      for (std::size_t k = 0; k < mlp.weights.size(); ++k) {
        b.weights.push_back(tape.leaf(mlp.weights[k]));
        b.biases.push_back(tape.leaf(mlp.biases[k]));
        bound.flat.push_back(b.weights.back());
        bound.flat.push_back(b.biases.back());
      }
      out.push_back(std::move(b));
    }
    return out;
  };
  bound.shared_encoders = bind_group(model.shared_encoders);
  bound.private_encoders = bind_group(model.private_encoders);
  bound.decoders = bind_group(model.decoders);
  bound.classifier_weight = tape.leaf(model.classifier_weight);
  bound.classifier_bias = tape.leaf(model.classifier_bias);
  bound.flat.push_back(bound.classifier_weight);
  bound.flat.push_back(bound.classifier_bias);
  return bound;
}

Value mlp_apply(const BoundMlp& mlp, const MlpSpec& spec, Value input) {
  Value x = input;
  for (std::size_t k = 0; k < mlp.weights.size(); ++k) {
    x = add(matmul(x, mlp.weights[k]), mlp.biases[k]);
    x = activate(x, k + 1 == mlp.weights.size() ? spec.output : spec.hidden);
  }
  return x;
}

std::pair<std::vector<Value>, std::vector<Value>> encode(Tape& tape, const MtdModel& model,
                                                         const BoundModel& bound,
                                                         const std::vector<Matrix>& inputs) {
  if (inputs.size() != model.shared_encoders.size()) {
    throw ShapeError("encode: " + std::to_string(inputs.size()) + " views for a model with " +
                     std::to_string(model.shared_encoders.size()));
  }
  std::vector<Value> shared, proprietary;
  for (std::size_t v = 0; v < inputs.size(); ++v) {
    if (inputs[v].cols() != model.config.view_dims[v]) {
      throw ShapeError("encode: view " + std::to_string(v) + " has width " +
                       std::to_string(inputs[v].cols()) + ", model expects " +
                       std::to_string(model.config.view_dims[v]));
    }
    Value x = tape.leaf(inputs[v]);
    shared.push_back(mlp_apply(bound.shared_encoders[v], model.shared_encoders[v].spec, x));
    if (!model.config.single_channel) {
      proprietary.push_back(
          mlp_apply(bound.private_encoders[v], model.private_encoders[v].spec, x));
    }
  }
  return {std::move(shared), std::move(proprietary)};
}

Value fuse(Tape& tape, const std::vector<Value>& per_view, const Matrix& view_index) {
  if (per_view.empty()) throw ContractError("fuse: no views");
  const std::size_t b = per_view[0].value().rows();
  const std::size_t d = per_view[0].value().cols();
  const std::size_t m = per_view.size();
  if (view_index.rows() != b || view_index.cols() != m) {
    throw ShapeError("fuse: view index " + view_index.shape_str() + " for " +
                     std::to_string(m) + " views x " + std::to_string(b) + " rows");
  }
  std::vector<double> available(b, 0.0);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t v = 0; v < m; ++v) available[i] += view_index(i, v);
    if (available[i] < 1.0) {
      throw ContractError("fuse: batch row " + std::to_string(i) + " has no available view");
    }
  }
  Value fused;
  for (std::size_t v = 0; v < m; ++v) {
    Matrix weight(b, d);
    for (std::size_t i = 0; i < b; ++i) {
      const double w = view_index(i, v) / available[i];
      for (std::size_t j = 0; j < d; ++j) weight(i, j) = w;
    }
    Value term = mul(per_view[v], tape.leaf(std::move(weight)));
    fused = v == 0 ? term : add(fused, term);
  }
  return fused;
}

Value gate_fuse(Value fused_shared, Value fused_proprietary) {
  return mul(sigmoid(fused_proprietary), fused_shared);
}

std::vector<Value> decode(const MtdModel& model, const BoundModel& bound,
                          const std::vector<Value>& shared,
                          const std::vector<Value>& proprietary) {
  std::vector<Value> out;
  for (std::size_t v = 0; v < shared.size(); ++v) {
    Value embedding =
        proprietary.empty() ? shared[v] : add(shared[v], proprietary[v]);
    out.push_back(mlp_apply(bound.decoders[v], model.decoders[v].spec, embedding));
  }
  return out;
}

Value classify(const MtdModel& model, const BoundModel& bound, Value features) {
  if (features.value().cols() != model.config.classifier_in_dim()) {
    throw ShapeError("classify: features have width " +
                     std::to_string(features.value().cols()) + ", classifier expects " +
                     std::to_string(model.config.classifier_in_dim()));
  }
  return sigmoid(add(matmul(features, bound.classifier_weight), bound.classifier_bias));
}

ForwardOutputs forward(Tape& tape, const MtdModel& model, const BoundModel& bound,
                       const std::vector<Matrix>& inputs, const Matrix& view_index) {
  ForwardOutputs out;
  auto [shared, proprietary] = encode(tape, model, bound, inputs);
  out.shared = std::move(shared);
  out.proprietary = std::move(proprietary);
  out.fused_shared = fuse(tape, out.shared, view_index);
  if (!model.config.single_channel) {
    out.fused_proprietary = fuse(tape, out.proprietary, view_index);
    out.z = gate_fuse(out.fused_shared, out.fused_proprietary);
  } else {
    out.z = out.fused_shared;
  }
  out.reconstructed = decode(model, bound, out.shared, out.proprietary);
  Value classifier_in = out.z;
  if (model.config.classifier_input == ClassifierInput::Concat && !model.config.single_channel) {
    classifier_in = concat_cols(out.fused_shared, out.fused_proprietary);
  }
  out.predictions = classify(model, bound, classifier_in);
  return out;
}

Matrix predict(const MtdModel& model, const std::vector<Matrix>& views,
               const Matrix& view_index) {
  Tape tape;
  BoundModel bound = bind_parameters(tape, model);
  ForwardOutputs out = forward(tape, model, bound, views, view_index);
  return out.predictions.value();
}

Matrix channel_similarity(const MtdModel& model, const std::vector<Matrix>& views,
                          const Matrix& view_index, std::size_t sample) {
  if (sample >= view_index.rows()) {
    throw ContractError("channel_similarity: sample " + std::to_string(sample) +
                        " out of range for " + std::to_string(view_index.rows()) + " rows");
  }
  Tape tape;
  BoundModel bound = bind_parameters(tape, model);
  auto [shared, proprietary] = encode(tape, model, bound, views);
  std::vector<const Matrix*> channels;
  for (const Value& s : shared) channels.push_back(&s.value());
  for (const Value& o : proprietary) channels.push_back(&o.value());
  const std::size_t count = channels.size();
  Matrix heat(count, count);
  for (std::size_t a = 0; a < count; ++a) {
    for (std::size_t b = a; b < count; ++b) {
      double dot = 0.0, na = 0.0, nb = 0.0;
      for (std::size_t j = 0; j < model.config.embed_dim; ++j) {
        const double x = (*channels[a])(sample, j);
        const double y = (*channels[b])(sample, j);
        dot += x * y;
        na += x * x;
        nb += y * y;
      }
      const double sim = dot / std::max(std::sqrt(na) * std::sqrt(nb), 1e-12);
      heat(a, b) = sim;
      heat(b, a) = sim;
    }
  }
  return heat;
}

namespace {

void write_mlp_group(std::ostream& out, const std::vector<Mlp>& mlps) {
  for (const Mlp& mlp : mlps) {
    for (std::size_t k = 0; k < mlp.weights.size(); ++k) {
      write_mvf(out, mlp.weights[k]);
      write_mvf(out, mlp.biases[k]);
    }
  }
}

void read_mlp_group(std::istream& in, std::vector<Mlp>& mlps, const std::string& path) {
  for (Mlp& mlp : mlps) {
    for (std::size_t k = 0; k < mlp.weights.size(); ++k) {
      mlp.weights[k] = read_mvf(in, path);
      mlp.biases[k] = read_mvf(in, path);
    }
  }
}

}  // namespace

void save_model(const std::string& path, const MtdModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(path + ": cannot open for writing");
  out.write(kCheckpointMagic, 4);
  write_u32(out, kCheckpointVersion);
  const ModelConfig& cfg = model.config;
  write_u32(out, static_cast<std::uint32_t>(cfg.view_dims.size()));
  for (std::size_t d : cfg.view_dims) write_u32(out, static_cast<std::uint32_t>(d));
  write_u32(out, static_cast<std::uint32_t>(cfg.embed_dim));
  write_u32(out, static_cast<std::uint32_t>(cfg.num_labels));
  write_u32(out, static_cast<std::uint32_t>(cfg.hidden_widths.size()));
  for (std::size_t w : cfg.hidden_widths) write_u32(out, static_cast<std::uint32_t>(w));
  write_u32(out, static_cast<std::uint32_t>(cfg.hidden_activation));
  write_u32(out, static_cast<std::uint32_t>(cfg.classifier_input));
  write_u32(out, cfg.single_channel ? 1 : 0);
  write_mlp_group(out, model.shared_encoders);
  write_mlp_group(out, model.private_encoders);
  write_mlp_group(out, model.decoders);
  write_mvf(out, model.classifier_weight);
  write_mvf(out, model.classifier_bias);
  if (!out) throw LoadError(path + ": write failed");
}

MtdModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path + ": cannot open");
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kCheckpointMagic, 4) != 0) {
    throw LoadError(path + ": bad magic, expected MTDC");
  }
  const std::uint32_t version = read_u32(in, path);
  if (version != kCheckpointVersion) {
    throw LoadError(path + ": unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  const std::uint32_t m = read_u32(in, path);
  for (std::uint32_t v = 0; v < m; ++v) cfg.view_dims.push_back(read_u32(in, path));
  cfg.embed_dim = read_u32(in, path);
  cfg.num_labels = read_u32(in, path);
  const std::uint32_t hidden_count = read_u32(in, path);
  cfg.hidden_widths.clear();
  for (std::uint32_t k = 0; k < hidden_count; ++k) cfg.hidden_widths.push_back(read_u32(in, path));
  cfg.hidden_activation = static_cast<Activation>(read_u32(in, path));
  cfg.classifier_input = static_cast<ClassifierInput>(read_u32(in, path));
  cfg.single_channel = read_u32(in, path) != 0;

  // Rebuild the structure, then overwrite every parameter from the stream.
  MtdModel model = init_model(cfg, 0);
  read_mlp_group(in, model.shared_encoders, path);
  read_mlp_group(in, model.private_encoders, path);
  read_mlp_group(in, model.decoders, path);
  model.classifier_weight = read_mvf(in, path);
  model.classifier_bias = read_mvf(in, path);
  return model;
}

}  // namespace mtd
