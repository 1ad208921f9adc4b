#ifndef MTD_LOSSES_HPP
#define MTD_LOSSES_HPP

#include <vector>

#include "mtd/matrix.hpp"
#include "mtd/tape.hpp"

namespace mtd {

struct LossWeights {
  double alpha = 0.4;  // graph regularization
  double beta = 0.4;   // cross-channel contrastive
  double gamma = 0.1;  // reconstruction
};

struct LossBreakdown {
  double classification = 0.0;  // l_mc
  double graph = 0.0;           // l_gc
  double contrastive = 0.0;     // l_ccc
  double reconstruction = 0.0;  // l_re
  double total = 0.0;           // l_mc + alpha*l_gc + beta*l_ccc + gamma*l_re
};

// Cross-channel contrastive loss. Per sample, the mean squared similarity of
// negative pairs (shared-proprietary across all available view pairs, with
// coefficient 2, plus proprietary-proprietary across distinct views) is
// divided by the mean shifted similarity of positive pairs (shared-shared
// across distinct views). Samples with fewer than two available views are
// skipped; the result is the mean over contributing samples (switchable to a
// plain sum).
Value contrastive_loss(const std::vector<Value>& shared, const std::vector<Value>& proprietary,
                       const Matrix& view_index, bool batch_sum = false);

// Weighted mean squared error against the unmasked originals:
// (1/b) * sum_v sum_i (1/d_v) ||Xhat_i - X_i||^2 W[i][v].
Value reconstruction_loss(const std::vector<Value>& reconstructed,
                          const std::vector<Matrix>& originals, const Matrix& view_index);

// Masked multi-label cross-entropy:
// -(1/(b*c)) * sum_{i,j} [Y log P + (1-Y) log(1-P)] G, logs clamped at 1e-12.
Value classification_loss(Value predictions, const Matrix& labels, const Matrix& label_index);

// total = l_mc + alpha*l_gc + beta*l_ccc + gamma*l_re. Also returns the
// evaluated breakdown for reporting.
std::pair<Value, LossBreakdown> total_loss(Value classification, Value graph, Value contrastive,
                                           Value reconstruction, const LossWeights& weights);

}  // namespace mtd

#endif  // MTD_LOSSES_HPP
