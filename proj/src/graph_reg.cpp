#include "mtd/graph_reg.hpp"

#include <string>

#include "mtd/errors.hpp"

namespace mtd {

SimilarityGraph build_graph(const Matrix& labels, const Matrix& label_index, double eta) {
  if (!labels.same_shape(label_index)) {
    throw ShapeError("build_graph: labels " + labels.shape_str() + " vs index " +
                     label_index.shape_str());
  }
  const std::size_t n = labels.rows();
  const std::size_t c = labels.cols();
  SimilarityGraph g;
  g.similarity = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double co_known = 0.0, shared = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        const double gi = label_index(i, k), gj = label_index(j, k);
        co_known += gi * gj;
        shared += (labels(i, k) * gi) * (labels(j, k) * gj);
      }
      const double num = co_known * shared;
      const double t = num / (num + eta);
      g.similarity(i, j) = t;
      g.similarity(j, i) = t;
    }
  }
  g.laplacian = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < n; ++j) degree += g.similarity(i, j);
    for (std::size_t j = 0; j < n; ++j) g.laplacian(i, j) = -g.similarity(i, j);
    g.laplacian(i, i) += degree;
  }
  return g;
}

Value graph_loss(Value embeddings, const SimilarityGraph& graph) {
  const Matrix& z = embeddings.value();
  if (z.rows() != graph.laplacian.rows()) {
    throw ShapeError("graph_loss: embeddings " + z.shape_str() + " vs laplacian " +
                     graph.laplacian.shape_str());
  }
  Tape& tape = *embeddings.tape;
  const std::size_t b = z.rows();
  // The pairwise sum over ordered (i, j) equals 2 Tr(Z^T L Z); the trace is
  // written as sum(Z (x) LZ).
  Value lz = matmul(tape.leaf(graph.laplacian), embeddings);
  Value inner = mul(embeddings, lz);
  return scale(sum(inner), 2.0 / static_cast<double>(b * b));
}

}  // namespace mtd
