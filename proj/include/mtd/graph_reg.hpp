#ifndef MTD_GRAPH_REG_HPP
#define MTD_GRAPH_REG_HPP

#include "mtd/matrix.hpp"
#include "mtd/tape.hpp"

namespace mtd {

// Sample similarity graph built from the weak labels of a batch.
// T[i][j] = C[i][j]*(y_i . y_j) / (C[i][j]*(y_i . y_j) + eta), where
// C[i][j] counts the labels known for both samples and y rows are gated by
// the label index, so unknown entries never contribute. L = D - T.
struct SimilarityGraph {
  Matrix similarity;  // T, symmetric, entries in [0, 1]
  Matrix laplacian;   // L = D - T, zero row sums
};

SimilarityGraph build_graph(const Matrix& labels, const Matrix& label_index, double eta = 100.0);

// (1/b^2) * sum_{i,j} ||Z_i - Z_j||^2 T[i][j] over ordered pairs,
// differentiable in Z and computed in trace form as (2/b^2) Tr(Z^T L Z).
Value graph_loss(Value embeddings, const SimilarityGraph& graph);

}  // namespace mtd

#endif  // MTD_GRAPH_REG_HPP
