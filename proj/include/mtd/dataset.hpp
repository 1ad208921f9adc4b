#ifndef MTD_DATASET_HPP
#define MTD_DATASET_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mtd/matrix.hpp"

namespace mtd {

// Multi-view multi-label data: m per-view feature matrices over the same n
// samples, a {0,1} label matrix, and the two availability index matrices.
// W[i][v] = 1 iff view v of sample i is available; G[i][j] = 1 iff label j of
// sample i is known. Unavailable view rows and unknown labels are stored as
// zeros.
struct MultiViewDataset {
  std::vector<Matrix> views;     // X^(v), each n x d_v
  Matrix labels;                 // Y in {0,1}^{n x c}
  Matrix view_index;             // W in {0,1}^{n x m}
  Matrix label_index;            // G in {0,1}^{n x c}
  std::vector<std::string> view_names;
  std::vector<std::string> category_names;
  // Pre-masking labels, retained so a later split can evaluate against full
  // ground truth. Equals `labels` when no label weakening was applied.
  std::optional<Matrix> complete_labels;

  std::size_t num_samples() const { return labels.rows(); }
  std::size_t num_views() const { return views.size(); }
  std::size_t num_labels() const { return labels.cols(); }
  std::vector<std::size_t> view_dims() const;

  // Checks every structural invariant; throws with a description on failure.
  void validate() const;
};

struct SplitSpec {
  double train_ratio = 0.7;
  std::uint64_t seed = 0;
};

struct IncompletenessSpec {
  double view_missing_rate = 0.5;
  double label_missing_rate = 0.5;
  std::uint64_t seed = 0;
};

struct SyntheticSpec {
  std::size_t n = 600;
  std::size_t m = 2;
  std::size_t c = 5;
  std::vector<std::size_t> view_dims;  // defaults to latent_dim * 2 per view
  std::size_t latent_dim = 8;          // must be >= c
  double noise = 0.25;
  std::uint64_t seed = 0;
};

// Directory layout: view_0.mvf ... view_{m-1}.mvf (CSV fallback view_v.csv),
// labels.csv, optional w.csv / g.csv (all-ones when absent), optional
// labels_full.csv carrying pre-masking ground truth.
MultiViewDataset load_dataset(const std::string& dir);
void save_dataset(const std::string& dir, const MultiViewDataset& data);

// Marks floor(rate*n) instances per view unavailable (zeroing them) while
// keeping at least one available view per sample, and per category hides the
// rate-fraction of its known positives and negatives separately. Counts are
// floored. The input must be complete (all-ones W and G).
MultiViewDataset simulate_incompleteness(const MultiViewDataset& data,
                                         const IncompletenessSpec& spec);

// Disjoint row partition. The test side gets all-ones G and the complete
// labels (evaluation uses full ground truth); its W is retained so inference
// still faces missing views.
std::pair<MultiViewDataset, MultiViewDataset> split(const MultiViewDataset& data,
                                                    const SplitSpec& spec);

// Row partition with explicit indices (used when reloading a saved manifest).
std::pair<MultiViewDataset, MultiViewDataset> split_by_indices(
    const MultiViewDataset& data, const std::vector<std::size_t>& train_rows,
    const std::vector<std::size_t>& test_rows);

// Samples drawn from c overlapping latent prototypes: each sample activates
// 1-3 categories, its latent vector is the mean of the active prototypes, and
// each view is a random linear map of the latent plus view noise.
MultiViewDataset generate_synthetic(const SyntheticSpec& spec);

// Row subset in the given order (views, labels, W, G, complete labels).
MultiViewDataset select_rows(const MultiViewDataset& data,
                             const std::vector<std::size_t>& rows);

}  // namespace mtd

#endif  // MTD_DATASET_HPP
