#include "mtd/losses.hpp"

#include <string>

#include "mtd/errors.hpp"

namespace mtd {

namespace {

constexpr double kRatioGuard = 1e-8;

// Per-sample availability product W[i][u]*W[i][v] as a b x 1 constant.
Matrix pair_mask(const Matrix& view_index, std::size_t u, std::size_t v) {
  Matrix m(view_index.rows(), 1);
  for (std::size_t i = 0; i < view_index.rows(); ++i)
    m(i, 0) = view_index(i, u) * view_index(i, v);
  return m;
}

// Row-wise dot products of two row-normalized matrices: b x 1 cosines.
Value row_cosines(Value a, Value b) { return sum_rows(mul(a, b)); }

}  // namespace

Value contrastive_loss(const std::vector<Value>& shared, const std::vector<Value>& proprietary,
                       const Matrix& view_index, bool batch_sum) {
  const std::size_t m = shared.size();
  if (m < 2) throw ContractError("contrastive_loss: needs at least two views");
  if (proprietary.size() != m) {
    throw ShapeError("contrastive_loss: " + std::to_string(m) + " shared views vs " +
                     std::to_string(proprietary.size()) + " proprietary");
  }
  Tape& tape = *shared[0].tape;
  const std::size_t b = shared[0].value().rows();

  std::vector<double> available(b, 0.0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t v = 0; v < m; ++v) available[i] += view_index(i, v);

  std::size_t contributing = 0;
  Matrix neg_denom(b, 1), pos_denom(b, 1), include(b, 1);
  for (std::size_t i = 0; i < b; ++i) {
    const double ni = available[i];
    if (ni >= 2.0) {
      neg_denom(i, 0) = 3.0 * ni * ni - ni;
      pos_denom(i, 0) = ni * ni - ni;
      include(i, 0) = 1.0;
      ++contributing;
    } else {
      // skipped sample: harmless denominators, contribution zeroed below
      neg_denom(i, 0) = 1.0;
      pos_denom(i, 0) = 1.0;
      include(i, 0) = 0.0;
    }
  }
  if (contributing == 0) return tape.leaf(Matrix(1, 1));

  std::vector<Value> shared_n, prop_n;
  for (std::size_t v = 0; v < m; ++v) {
    shared_n.push_back(row_l2_normalize(shared[v]));
    prop_n.push_back(row_l2_normalize(proprietary[v]));
  }

  // negatives: shared-proprietary over all ordered pairs (factor 2), plus
  // proprietary-proprietary over distinct ordered pairs
  Value neg_sp, neg_pp;
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      Value sim = row_cosines(shared_n[u], prop_n[v]);
      Value term = mul(mul(sim, sim), tape.leaf(pair_mask(view_index, u, v)));
      neg_sp = neg_sp.valid() ? add(neg_sp, term) : term;
      if (u != v) {
        Value sim_pp = row_cosines(prop_n[u], prop_n[v]);
        Value term_pp = mul(mul(sim_pp, sim_pp), tape.leaf(pair_mask(view_index, u, v)));
        neg_pp = neg_pp.valid() ? add(neg_pp, term_pp) : term_pp;
      }
    }
  }
  Value negatives = div(add(scale(neg_sp, 2.0), neg_pp), tape.leaf(neg_denom));

  // positives: shared-shared over distinct ordered pairs, shifted to [0, 1]
  Value pos_acc;
  for (std::size_t u = 0; u < m; ++u) {
    for (std::size_t v = 0; v < m; ++v) {
      if (u == v) continue;
      Value sim = row_cosines(shared_n[u], shared_n[v]);
      Value term = mul(scale(add_scalar(sim, 1.0), 0.5), tape.leaf(pair_mask(view_index, u, v)));
      pos_acc = pos_acc.valid() ? add(pos_acc, term) : term;
    }
  }
  Value positives = div(pos_acc, tape.leaf(pos_denom));

  Value ratio = div(negatives, clamp_min(positives, kRatioGuard));
  const double weight = batch_sum ? 1.0 : 1.0 / static_cast<double>(contributing);
  Matrix selector(b, 1);
  for (std::size_t i = 0; i < b; ++i) selector(i, 0) = include(i, 0) * weight;
  return sum(mul(ratio, tape.leaf(std::move(selector))));
}

Value reconstruction_loss(const std::vector<Value>& reconstructed,
                          const std::vector<Matrix>& originals, const Matrix& view_index) {
  if (reconstructed.size() != originals.size()) {
    throw ShapeError("reconstruction_loss: " + std::to_string(reconstructed.size()) +
                     " reconstructions vs " + std::to_string(originals.size()) + " targets");
  }
  Tape& tape = *reconstructed[0].tape;
  const std::size_t b = originals[0].rows();
  Value total;
  for (std::size_t v = 0; v < reconstructed.size(); ++v) {
    if (!reconstructed[v].value().same_shape(originals[v])) {
      throw ShapeError("reconstruction_loss: view " + std::to_string(v) + " shapes " +
                       reconstructed[v].value().shape_str() + " vs " +
                       originals[v].shape_str());
    }
    const double inv_dim = 1.0 / static_cast<double>(originals[v].cols());
    Matrix gate(b, 1);
    for (std::size_t i = 0; i < b; ++i) gate(i, 0) = view_index(i, v) * inv_dim;
    Value diff = sub(reconstructed[v], tape.leaf(originals[v]));
    Value per_row = sum_rows(mul(diff, diff));
    Value gated = sum(mul(per_row, tape.leaf(std::move(gate))));
    total = total.valid() ? add(total, gated) : gated;
  }
  return scale(total, 1.0 / static_cast<double>(b));
}

Value classification_loss(Value predictions, const Matrix& labels, const Matrix& label_index) {
  const Matrix& p = predictions.value();
  if (!p.same_shape(labels) || !p.same_shape(label_index)) {
    throw ShapeError("classification_loss: predictions " + p.shape_str() + ", labels " +
                     labels.shape_str() + ", index " + label_index.shape_str());
  }
  Tape& tape = *predictions.tape;
  const std::size_t b = p.rows(), c = p.cols();
  Matrix y_known(b, c), not_y_known(b, c);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < c; ++j) {
      y_known(i, j) = labels(i, j) * label_index(i, j);
      not_y_known(i, j) = (1.0 - labels(i, j)) * label_index(i, j);
    }
  }
  Value log_p = log_clamped(predictions);
  Value log_not_p = log_clamped(sub(tape.leaf(Matrix::full(b, c, 1.0)), predictions));
  Value score = add(mul(log_p, tape.leaf(std::move(y_known))),
                    mul(log_not_p, tape.leaf(std::move(not_y_known))));
  return scale(sum(score), -1.0 / static_cast<double>(b * c));
}

std::pair<Value, LossBreakdown> total_loss(Value classification, Value graph, Value contrastive,
                                           Value reconstruction, const LossWeights& weights) {
  if (weights.alpha < 0.0 || weights.beta < 0.0 || weights.gamma < 0.0) {
    throw ContractError("total_loss: penalty weights must be nonnegative");
  }
  Value total = add(add(classification, scale(graph, weights.alpha)),
                    add(scale(contrastive, weights.beta), scale(reconstruction, weights.gamma)));
  LossBreakdown breakdown;
  breakdown.classification = classification.value()(0, 0);
  breakdown.graph = graph.value()(0, 0);
  breakdown.contrastive = contrastive.value()(0, 0);
  breakdown.reconstruction = reconstruction.value()(0, 0);
  breakdown.total = total.value()(0, 0);
  return {total, breakdown};
}

}  // namespace mtd
