#include "mtd/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <vector>

#include "mtd/errors.hpp"

namespace mtd {

namespace {

void check_shapes(const Matrix& scores, const Matrix& labels, const char* op) {
  if (!scores.same_shape(labels)) {
    throw ShapeError(std::string(op) + ": scores " + scores.shape_str() + " vs labels " +
                     labels.shape_str());
  }
  if (scores.rows() == 0 || scores.cols() == 0) {
    throw ContractError(std::string(op) + ": empty input");
  }
}

// Label indices of row i sorted by descending score, ties by ascending index.
std::vector<std::size_t> ranking_of_row(const Matrix& scores, std::size_t i) {
  std::vector<std::size_t> order(scores.cols());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&scores, i](std::size_t a, std::size_t b) {
    return scores(i, a) > scores(i, b);
  });
  return order;
}

std::size_t count_positives(const Matrix& labels, std::size_t i) {
  std::size_t k = 0;
  for (std::size_t j = 0; j < labels.cols(); ++j)
    if (labels(i, j) == 1.0) ++k;
  return k;
}

}  // namespace

double average_precision(const Matrix& scores, const Matrix& labels) {
  check_shapes(scores, labels, "average_precision");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (count_positives(labels, i) == 0) continue;
    const auto order = ranking_of_row(scores, i);
    double sample_ap = 0.0;
    std::size_t positives_seen = 0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
      if (labels(i, order[rank - 1]) == 1.0) {
        ++positives_seen;
        sample_ap += static_cast<double>(positives_seen) / static_cast<double>(rank);
      }
    }
    total += sample_ap / static_cast<double>(positives_seen);
    ++counted;
  }
  if (counted == 0) throw UndefinedMetricError("average_precision: no sample has a positive label");
  return total / static_cast<double>(counted);
}

double hamming(const Matrix& scores, const Matrix& labels, double threshold) {
  check_shapes(scores, labels, "hamming");
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    for (std::size_t j = 0; j < scores.cols(); ++j) {
      const double predicted = scores(i, j) >= threshold ? 1.0 : 0.0;
      if (predicted != labels(i, j)) ++mismatches;
    }
  }
  return 1.0 - static_cast<double>(mismatches) / static_cast<double>(scores.size());
}

double ranking_loss(const Matrix& scores, const Matrix& labels) {
  check_shapes(scores, labels, "ranking_loss");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    std::vector<std::size_t> pos, neg;
    for (std::size_t j = 0; j < scores.cols(); ++j)
      (labels(i, j) == 1.0 ? pos : neg).push_back(j);
    if (pos.empty() || neg.empty()) continue;
    double bad = 0.0;
    for (std::size_t p : pos) {
      for (std::size_t q : neg) {
        if (scores(i, p) < scores(i, q)) bad += 1.0;
        else if (scores(i, p) == scores(i, q)) bad += 0.5;
      }
    }
    total += bad / static_cast<double>(pos.size() * neg.size());
    ++counted;
  }
  if (counted == 0) {
    throw UndefinedMetricError("ranking_loss: every sample lacks a positive or a negative");
  }
  return 1.0 - total / static_cast<double>(counted);
}

double auc(const Matrix& scores, const Matrix& labels) {
  check_shapes(scores, labels, "auc");
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.rows(); ++i)
      (labels(i, j) == 1.0 ? pos : neg).push_back(scores(i, j));
    if (pos.empty() || neg.empty()) continue;
    double good = 0.0;
    for (double p : pos) {
      for (double q : neg) {
        if (p > q) good += 1.0;
        else if (p == q) good += 0.5;
      }
    }
    total += good / static_cast<double>(pos.size() * neg.size());
    ++counted;
  }
  if (counted == 0) {
    throw UndefinedMetricError("auc: every label lacks a positive or a negative sample");
  }
  return total / static_cast<double>(counted);
}

double one_error(const Matrix& scores, const Matrix& labels) {
  check_shapes(scores, labels, "one_error");
  std::size_t errors = 0, counted = 0;
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (count_positives(labels, i) == 0) continue;
    std::size_t top = 0;
    for (std::size_t j = 1; j < scores.cols(); ++j) {
      if (scores(i, j) > scores(i, top)) top = j;  // ties keep the lowest index
    }
    if (labels(i, top) != 1.0) ++errors;
    ++counted;
  }
  if (counted == 0) throw UndefinedMetricError("one_error: no sample has a positive label");
  return 1.0 - static_cast<double>(errors) / static_cast<double>(counted);
}

double coverage(const Matrix& scores, const Matrix& labels) {
  check_shapes(scores, labels, "coverage");
  double total = 0.0;
  std::size_t counted = 0;
  const double c = static_cast<double>(scores.cols());
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    if (count_positives(labels, i) == 0) continue;
    const auto order = ranking_of_row(scores, i);
    std::size_t deepest = 0;
    for (std::size_t rank = 1; rank <= order.size(); ++rank) {
      if (labels(i, order[rank - 1]) == 1.0) deepest = rank;
    }
    total += (static_cast<double>(deepest) - 1.0) / c;
    ++counted;
  }
  if (counted == 0) throw UndefinedMetricError("coverage: no sample has a positive label");
  return 1.0 - total / static_cast<double>(counted);
}

MetricsReport compute_metrics(const Matrix& scores, const Matrix& labels) {
  check_shapes(scores, labels, "compute_metrics");
  MetricsReport report;
  report.average_precision = average_precision(scores, labels);
  report.one_minus_hamming = hamming(scores, labels);
  report.one_minus_ranking = ranking_loss(scores, labels);
  report.auc = auc(scores, labels);
  report.one_minus_one_error = one_error(scores, labels);
  report.one_minus_coverage = coverage(scores, labels);
  for (std::size_t i = 0; i < scores.rows(); ++i) {
    const std::size_t pos = count_positives(labels, i);
    std::size_t neg = scores.cols() - pos;
    if (pos == 0) {
      ++report.ap_skipped_samples;
      ++report.oe_skipped_samples;
      ++report.cov_skipped_samples;
    }
    if (pos == 0 || neg == 0) ++report.rl_skipped_samples;
  }
  for (std::size_t j = 0; j < scores.cols(); ++j) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < scores.rows(); ++i)
      if (labels(i, j) == 1.0) ++pos;
    if (pos == 0 || pos == scores.rows()) ++report.auc_skipped_labels;
  }
  return report;
}

std::string MetricsReport::csv_header() {
  return "ap,one_minus_hl,one_minus_rl,auc,one_minus_oe,one_minus_cov";
}

std::string MetricsReport::csv_row() const {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%.12g,%.12g,%.12g,%.12g,%.12g,%.12g", average_precision,
                one_minus_hamming, one_minus_ranking, auc, one_minus_one_error,
                one_minus_coverage);
  return buf;
}

}  // namespace mtd
