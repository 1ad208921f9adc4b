#ifndef MTD_METRICS_HPP
#define MTD_METRICS_HPP

#include <cstddef>
#include <string>

#include "mtd/matrix.hpp"

namespace mtd {

// The six multi-label scores, reported so that higher is always better
// (HL, RL, OE and Cov enter as 1-x). Degenerate samples or labels (no
// positives, or no negatives where required) are skipped and counted.
struct MetricsReport {
  double average_precision = 0.0;
  double one_minus_hamming = 0.0;
  double one_minus_ranking = 0.0;
  double auc = 0.0;
  double one_minus_one_error = 0.0;
  double one_minus_coverage = 0.0;

  std::size_t ap_skipped_samples = 0;
  std::size_t rl_skipped_samples = 0;
  std::size_t oe_skipped_samples = 0;
  std::size_t cov_skipped_samples = 0;
  std::size_t auc_skipped_labels = 0;

  // One CSV row in Table-1 column order: AP, 1-HL, 1-RL, AUC, 1-OE, 1-Cov.
  std::string csv_row() const;
  static std::string csv_header();
};

// Mean over samples (>=1 positive) of the mean precision at the descending
// ranks of the true labels; ties broken by ascending label index.
double average_precision(const Matrix& scores, const Matrix& labels);

// 1 - HL after thresholding; scores exactly at the threshold count positive.
double hamming(const Matrix& scores, const Matrix& labels, double threshold = 0.5);

// 1 - RL: per sample the fraction of (positive, negative) label pairs that
// are ordered correctly, ties counting half.
double ranking_loss(const Matrix& scores, const Matrix& labels);

// Macro average over labels of the Mann-Whitney column AUC, ties half.
double auc(const Matrix& scores, const Matrix& labels);

// 1 - OE: fraction of samples whose top-ranked label is a true positive.
double one_error(const Matrix& scores, const Matrix& labels);

// 1 - Cov with Cov_i = (deepest positive rank - 1)/c, ranks 1-based.
double coverage(const Matrix& scores, const Matrix& labels);

MetricsReport compute_metrics(const Matrix& scores, const Matrix& labels);

}  // namespace mtd

#endif  // MTD_METRICS_HPP
