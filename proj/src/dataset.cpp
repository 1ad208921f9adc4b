#include "mtd/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>
#include <string>

#include "mtd/errors.hpp"
#include "mtd/io.hpp"
#include "mtd/rng.hpp"

namespace fs = std::filesystem;

namespace mtd {

namespace {

bool is_binary(const Matrix& m) {
  for (double v : m.data())
    if (v != 0.0 && v != 1.0) return false;
  return true;
}

std::size_t floor_count(double rate, std::size_t n) {
  return static_cast<std::size_t>(std::floor(rate * static_cast<double>(n) + 1e-9));
}

}  // namespace

std::vector<std::size_t> MultiViewDataset::view_dims() const {
  std::vector<std::size_t> dims;
  dims.reserve(views.size());
  for (const Matrix& v : views) dims.push_back(v.cols());
  return dims;
}

void MultiViewDataset::validate() const {
  const std::size_t n = labels.rows();
  const std::size_t m = views.size();
  const std::size_t c = labels.cols();
  if (m == 0) throw LoadError("dataset: no views");
  for (std::size_t v = 0; v < m; ++v) {
    if (views[v].rows() != n) {
      throw LoadError("dataset: view " + std::to_string(v) + " has " +
                      std::to_string(views[v].rows()) + " rows but labels have " +
                      std::to_string(n));
    }
  }
  if (view_index.rows() != n || view_index.cols() != m) {
    throw LoadError("dataset: view index is " + view_index.shape_str() + ", expected " +
                    std::to_string(n) + "x" + std::to_string(m));
  }
  if (label_index.rows() != n || label_index.cols() != c) {
    throw LoadError("dataset: label index is " + label_index.shape_str() + ", expected " +
                    std::to_string(n) + "x" + std::to_string(c));
  }
  if (!is_binary(labels)) throw LoadError("dataset: labels must be 0/1");
  if (!is_binary(view_index)) throw LoadError("dataset: view index must be 0/1");
  if (!is_binary(label_index)) throw LoadError("dataset: label index must be 0/1");
  for (std::size_t i = 0; i < n; ++i) {
    double avail = 0.0;
    for (std::size_t v = 0; v < m; ++v) avail += view_index(i, v);
    if (avail < 1.0) {
      throw LoadError("dataset: sample " + std::to_string(i) + " has no available view");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = 0; v < m; ++v) {
      if (view_index(i, v) != 0.0) continue;
      for (std::size_t j = 0; j < views[v].cols(); ++j) {
        if (views[v](i, j) != 0.0) {
          throw LoadError("dataset: view " + std::to_string(v) + " row " + std::to_string(i) +
                          " is marked missing but holds nonzero features");
        }
      }
    }
    for (std::size_t j = 0; j < c; ++j) {
      if (label_index(i, j) == 0.0 && labels(i, j) != 0.0) {
        throw LoadError("dataset: label (" + std::to_string(i) + "," + std::to_string(j) +
                        ") is marked unknown but set to 1");
      }
    }
  }
  if (complete_labels) {
    if (!complete_labels->same_shape(labels)) {
      throw LoadError("dataset: complete labels are " + complete_labels->shape_str() +
                      " but labels are " + labels.shape_str());
    }
    if (!is_binary(*complete_labels)) throw LoadError("dataset: complete labels must be 0/1");
  }
}

MultiViewDataset load_dataset(const std::string& dir) {
  MultiViewDataset data;
  for (std::size_t v = 0;; ++v) {
    const fs::path mvf = fs::path(dir) / ("view_" + std::to_string(v) + ".mvf");
    const fs::path csv = fs::path(dir) / ("view_" + std::to_string(v) + ".csv");
    if (fs::exists(mvf)) {
      data.views.push_back(read_mvf_file(mvf.string()));
    } else if (fs::exists(csv)) {
      data.views.push_back(read_csv_matrix(csv.string()));
    } else {
      break;
    }
  }
  if (data.views.empty()) throw LoadError(dir + ": no view_0.mvf or view_0.csv found");
  const fs::path labels = fs::path(dir) / "labels.csv";
  if (!fs::exists(labels)) throw LoadError(dir + ": labels.csv missing");
  data.labels = read_binary_csv(labels.string());
  const std::size_t n = data.labels.rows();

  const fs::path w = fs::path(dir) / "w.csv";
  data.view_index =
      fs::exists(w) ? read_binary_csv(w.string()) : Matrix::full(n, data.views.size(), 1.0);
  const fs::path g = fs::path(dir) / "g.csv";
  data.label_index =
      fs::exists(g) ? read_binary_csv(g.string()) : Matrix::full(n, data.labels.cols(), 1.0);

  const fs::path full = fs::path(dir) / "labels_full.csv";
  if (fs::exists(full)) data.complete_labels = read_binary_csv(full.string());

  data.validate();
  return data;
}

void save_dataset(const std::string& dir, const MultiViewDataset& data) {
  fs::create_directories(dir);
  for (std::size_t v = 0; v < data.views.size(); ++v) {
    write_mvf_file((fs::path(dir) / ("view_" + std::to_string(v) + ".mvf")).string(),
                   data.views[v]);
  }
  write_binary_csv((fs::path(dir) / "labels.csv").string(), data.labels);
  write_binary_csv((fs::path(dir) / "w.csv").string(), data.view_index);
  write_binary_csv((fs::path(dir) / "g.csv").string(), data.label_index);
  if (data.complete_labels) {
    write_binary_csv((fs::path(dir) / "labels_full.csv").string(), *data.complete_labels);
  }
}

MultiViewDataset simulate_incompleteness(const MultiViewDataset& data,
                                         const IncompletenessSpec& spec) {
  if (spec.view_missing_rate < 0.0 || spec.view_missing_rate >= 1.0 ||
      spec.label_missing_rate < 0.0 || spec.label_missing_rate >= 1.0) {
    throw ContractError("simulate_incompleteness: rates must lie in [0, 1)");
  }
  const std::size_t n = data.num_samples();
  const std::size_t m = data.num_views();
  const std::size_t c = data.num_labels();
  for (double v : data.view_index.data())
    if (v != 1.0) throw ContractError("simulate_incompleteness: input W must be all-ones");
  for (double v : data.label_index.data())
    if (v != 1.0) throw ContractError("simulate_incompleteness: input G must be all-ones");

  const std::size_t per_view = floor_count(spec.view_missing_rate, n);
  if (per_view * m > n * (m - 1)) {
    throw TrainError("simulate_incompleteness: removing " + std::to_string(per_view) +
                     " instances per view cannot leave every sample one available view");
  }

  MultiViewDataset out = data;
  out.complete_labels = data.complete_labels ? data.complete_labels : std::optional<Matrix>(data.labels);
  Rng rng(spec.seed);

  // Per-column sampling, then rejection-and-repair: any sample left with no
  // views has one restored and a compensating removal made in the same
  // column, keeping per-column counts exact.
  if (per_view > 0) {
    for (std::size_t v = 0; v < m; ++v) {
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), 0);
      rng.shuffle(order);
      for (std::size_t k = 0; k < per_view; ++k) out.view_index(order[k], v) = 0.0;
    }
    std::vector<double> avail(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t v = 0; v < m; ++v) avail[i] += out.view_index(i, v);
    for (std::size_t i = 0; i < n; ++i) {
      if (avail[i] >= 1.0) continue;
      // restore a uniformly chosen view whose column holds a donor (a sample
      // with two or more available views), then remove the donor's entry so
      // the column count stays exact
      std::vector<std::size_t> feasible;
      for (std::size_t v = 0; v < m; ++v) {
        for (std::size_t r = 0; r < n; ++r) {
          if (r != i && out.view_index(r, v) == 1.0 && avail[r] >= 2.0) {
            feasible.push_back(v);
            break;
          }
        }
      }
      if (feasible.empty()) {
        throw TrainError("simulate_incompleteness: cannot repair sample " + std::to_string(i) +
                         " without starving another sample");
      }
      const std::size_t v = feasible[rng.below(feasible.size())];
      out.view_index(i, v) = 1.0;
      avail[i] = 1.0;
      std::vector<std::size_t> candidates;
      for (std::size_t r = 0; r < n; ++r) {
        if (r != i && out.view_index(r, v) == 1.0 && avail[r] >= 2.0) candidates.push_back(r);
      }
      const std::size_t r = candidates[rng.below(candidates.size())];
      out.view_index(r, v) = 0.0;
      avail[r] -= 1.0;
    }
    for (std::size_t v = 0; v < m; ++v) {
      for (std::size_t i = 0; i < n; ++i) {
        if (out.view_index(i, v) == 0.0) {
          for (std::size_t j = 0; j < out.views[v].cols(); ++j) out.views[v](i, j) = 0.0;
        }
      }
    }
  }

  // Per category, positives and negatives are hidden separately so rare
  // categories keep their class balance.
  if (spec.label_missing_rate > 0.0) {
    for (std::size_t j = 0; j < c; ++j) {
      std::vector<std::size_t> pos, neg;
      for (std::size_t i = 0; i < n; ++i) {
        (data.labels(i, j) == 1.0 ? pos : neg).push_back(i);
      }
      rng.shuffle(pos);
      rng.shuffle(neg);
      const std::size_t hide_pos = floor_count(spec.label_missing_rate, pos.size());
      const std::size_t hide_neg = floor_count(spec.label_missing_rate, neg.size());
      for (std::size_t k = 0; k < hide_pos; ++k) {
        out.label_index(pos[k], j) = 0.0;
        out.labels(pos[k], j) = 0.0;
      }
      for (std::size_t k = 0; k < hide_neg; ++k) {
        out.label_index(neg[k], j) = 0.0;
        out.labels(neg[k], j) = 0.0;
      }
    }
  }

  out.validate();
  return out;
}

MultiViewDataset select_rows(const MultiViewDataset& data,
                             const std::vector<std::size_t>& rows) {
  MultiViewDataset out;
  out.view_names = data.view_names;
  out.category_names = data.category_names;
  auto take = [&rows](const Matrix& src) {
    Matrix dst(rows.size(), src.cols());
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < src.cols(); ++j) dst(i, j) = src(rows[i], j);
    return dst;
  };
  for (const Matrix& v : data.views) out.views.push_back(take(v));
  out.labels = take(data.labels);
  out.view_index = take(data.view_index);
  out.label_index = take(data.label_index);
  if (data.complete_labels) out.complete_labels = take(*data.complete_labels);
  return out;
}

std::pair<MultiViewDataset, MultiViewDataset> split_by_indices(
    const MultiViewDataset& data, const std::vector<std::size_t>& train_rows,
    const std::vector<std::size_t>& test_rows) {
  MultiViewDataset train = select_rows(data, train_rows);
  MultiViewDataset test = select_rows(data, test_rows);
  // evaluation uses full ground truth; missing labels afflict training only
  if (test.complete_labels) test.labels = *test.complete_labels;
  test.label_index = Matrix::full(test.num_samples(), test.num_labels(), 1.0);
  train.validate();
  test.validate();
  return {std::move(train), std::move(test)};
}

std::pair<MultiViewDataset, MultiViewDataset> split(const MultiViewDataset& data,
                                                    const SplitSpec& spec) {
  const std::size_t n = data.num_samples();
  if (spec.train_ratio <= 0.0 || spec.train_ratio >= 1.0) {
    throw ContractError("split: train ratio must lie in (0, 1)");
  }
  const std::size_t train_n = floor_count(spec.train_ratio, n);
  if (train_n == 0 || train_n == n) {
    throw ContractError("split: ratio " + std::to_string(spec.train_ratio) + " over " +
                        std::to_string(n) + " samples leaves one side empty");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(spec.seed);
  rng.shuffle(order);
  std::vector<std::size_t> train_rows(order.begin(), order.begin() + train_n);
  std::vector<std::size_t> test_rows(order.begin() + train_n, order.end());
  return split_by_indices(data, train_rows, test_rows);
}

MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.latent_dim < spec.c) {
    throw ContractError("generate_synthetic: latent_dim must be >= number of categories");
  }
  std::vector<std::size_t> dims = spec.view_dims;
  if (dims.empty()) dims.assign(spec.m, spec.latent_dim * 2);
  if (dims.size() != spec.m) {
    throw ContractError("generate_synthetic: need one dimension per view");
  }
  Rng rng(spec.seed);

  // Orthonormal prototypes via Gram-Schmidt over Gaussian draws; category j's
  // presence is then linearly decodable from the latent average.
  Matrix prototypes(spec.c, spec.latent_dim);
  for (std::size_t k = 0; k < spec.c; ++k) {
    std::vector<double> row(spec.latent_dim);
    for (;;) {
      for (double& x : row) x = rng.normal();
      for (std::size_t p = 0; p < k; ++p) {
        double dot = 0.0;
        for (std::size_t j = 0; j < spec.latent_dim; ++j) dot += row[j] * prototypes(p, j);
        for (std::size_t j = 0; j < spec.latent_dim; ++j) row[j] -= dot * prototypes(p, j);
      }
      double norm = 0.0;
      for (double x : row) norm += x * x;
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t j = 0; j < spec.latent_dim; ++j) prototypes(k, j) = row[j] / norm;
        break;
      }
    }
  }

  Matrix labels(spec.n, spec.c);
  Matrix latent(spec.n, spec.latent_dim);
  const std::size_t max_active = std::min<std::size_t>(3, spec.c);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const std::size_t k = 1 + static_cast<std::size_t>(rng.below(max_active));
    std::vector<std::size_t> cats(spec.c);
    std::iota(cats.begin(), cats.end(), 0);
    rng.shuffle(cats);
    cats.resize(k);
    std::sort(cats.begin(), cats.end());  // accumulation order independent of the draw order
    for (std::size_t a : cats) labels(i, a) = 1.0;
    for (std::size_t a : cats)
      for (std::size_t j = 0; j < spec.latent_dim; ++j)
        latent(i, j) += prototypes(a, j) / static_cast<double>(k);
  }

  MultiViewDataset data;
  data.labels = labels;
  data.view_index = Matrix::full(spec.n, spec.m, 1.0);
  data.label_index = Matrix::full(spec.n, spec.c, 1.0);
  const double map_scale = 1.0 / std::sqrt(static_cast<double>(spec.latent_dim));
  for (std::size_t v = 0; v < spec.m; ++v) {
    Matrix map = Matrix::gaussian(spec.latent_dim, dims[v], 0.0, map_scale, rng);
    Matrix x = matmul(latent, map);
    if (spec.noise > 0.0) {
      // view-specific noise: a structured per-sample nuisance component that
      // lives in this view only, on top of a dense independent floor
      Matrix nuisance = Matrix::gaussian(spec.n, spec.latent_dim, 0.0, 1.0, rng);
      Matrix nuisance_map = Matrix::gaussian(spec.latent_dim, dims[v], 0.0, map_scale, rng);
      const Matrix structured = matmul(nuisance, nuisance_map);
      for (std::size_t k = 0; k < x.size(); ++k) {
        x.data()[k] += 0.4 * spec.noise * structured.data()[k] + spec.noise * rng.normal();
      }
    }
    data.views.push_back(std::move(x));
  }
  data.validate();
  return data;
}

}  // namespace mtd
