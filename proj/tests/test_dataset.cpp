#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "baselines.hpp"
#include "mtd/dataset.hpp"
#include "mtd/errors.hpp"
#include "mtd/io.hpp"
#include "mtd/metrics.hpp"
#include "mtd/rng.hpp"
#include "support.hpp"

using namespace mtd;
using namespace mtd::testsupport;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("mtd_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

MultiViewDataset tiny_complete(std::size_t n = 12, std::size_t m = 2, std::size_t c = 3,
                               std::uint64_t seed = 0) {
  Rng rng(seed);
  MultiViewDataset data;
  data.views.push_back(random_matrix(n, 4, rng));
  for (std::size_t v = 1; v < m; ++v) data.views.push_back(random_matrix(n, 5, rng));
  data.labels = Matrix(n, c);
  for (std::size_t i = 0; i < n; ++i) {
    data.labels(i, rng.below(c)) = 1.0;  // at least one positive per row
    for (std::size_t j = 0; j < c; ++j)
      if (rng.uniform() < 0.3) data.labels(i, j) = 1.0;
  }
  data.view_index = Matrix::full(n, m, 1.0);
  data.label_index = Matrix::full(n, c, 1.0);
  return data;
}

}  // namespace

TEST_CASE("mvf round trip is bit exact") {
  TempDir dir("mvf");
  Rng rng(4);
  const Matrix m = random_matrix(7, 3, rng);
  const std::string path = (dir.path / "m.mvf").string();
  write_mvf_file(path, m);
  CHECK(read_mvf_file(path) == m);
}

TEST_CASE("load_dataset reads a full directory") {
  TempDir dir("load");
  MultiViewDataset data = tiny_complete(4, 2, 2);
  // 4x3 and 4x5 views per the shapes below
  data.views[0] = Matrix(4, 3);
  data.views[1] = Matrix(4, 5);
  for (std::size_t i = 0; i < 4; ++i) {
    data.views[0](i, 0) = static_cast<double>(i);
    data.views[1](i, 1) = static_cast<double>(i) * 0.5;
  }
  save_dataset(dir.path.string(), data);
  const MultiViewDataset loaded = load_dataset(dir.path.string());
  CHECK(loaded.num_samples() == 4);
  CHECK(loaded.num_views() == 2);
  CHECK(loaded.num_labels() == 2);
  CHECK(loaded.views[0] == data.views[0]);
  CHECK(loaded.labels == data.labels);
}

TEST_CASE("load_dataset uses all-ones indices when files are absent") {
  TempDir dir("noindex");
  MultiViewDataset data = tiny_complete(5, 2, 3);
  save_dataset(dir.path.string(), data);
  fs::remove(dir.path / "w.csv");
  fs::remove(dir.path / "g.csv");
  const MultiViewDataset loaded = load_dataset(dir.path.string());
  for (double v : loaded.view_index.data()) CHECK(v == 1.0);
  for (double v : loaded.label_index.data()) CHECK(v == 1.0);
}

TEST_CASE("label file with a 2 fails naming the row") {
  TempDir dir("badlabel");
  MultiViewDataset data = tiny_complete(4, 2, 2);
  save_dataset(dir.path.string(), data);
  std::ofstream labels(dir.path / "labels.csv");
  labels << "1,0\n0,1\n2,0\n0,0\n";
  labels.close();
  try {
    load_dataset(dir.path.string());
    FAIL("expected LoadError");
  } catch (const LoadError& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
}

TEST_CASE("mismatched view row counts fail") {
  TempDir dir("badrows");
  MultiViewDataset data = tiny_complete(4, 2, 2);
  save_dataset(dir.path.string(), data);
  Rng rng(0);
  write_mvf_file((dir.path / "view_1.mvf").string(), random_matrix(5, 5, rng));
  CHECK_THROWS_AS(load_dataset(dir.path.string()), LoadError);
}

TEST_CASE("csv fallback for views") {
  TempDir dir("csvview");
  MultiViewDataset data = tiny_complete(4, 1, 2);
  save_dataset(dir.path.string(), data);
  const Matrix view = read_mvf_file((dir.path / "view_0.mvf").string());
  fs::remove(dir.path / "view_0.mvf");
  write_csv_matrix((dir.path / "view_0.csv").string(), view);
  const MultiViewDataset loaded = load_dataset(dir.path.string());
  CHECK(max_abs_diff(loaded.views[0], view) < 1e-12);
}

TEST_CASE("simulate_incompleteness: zero rates are the identity") {
  const MultiViewDataset data = tiny_complete();
  const MultiViewDataset out = simulate_incompleteness(data, {0.0, 0.0, 7});
  CHECK(out.views[0] == data.views[0]);
  CHECK(out.labels == data.labels);
  CHECK(out.view_index == data.view_index);
  CHECK(out.label_index == data.label_index);
}

TEST_CASE("simulate_incompleteness: per-column counts and no starved sample") {
  const MultiViewDataset data = tiny_complete(100, 2, 3, 5);
  const MultiViewDataset out = simulate_incompleteness(data, {0.5, 0.0, 11});
  for (std::size_t v = 0; v < 2; ++v) {
    std::size_t zeros = 0;
    for (std::size_t i = 0; i < 100; ++i)
      if (out.view_index(i, v) == 0.0) ++zeros;
    CHECK(zeros == 50);
  }
  for (std::size_t i = 0; i < 100; ++i) {
    double avail = out.view_index(i, 0) + out.view_index(i, 1);
    CHECK(avail >= 1.0);
  }
  // zeroed rows really are zero
  for (std::size_t v = 0; v < 2; ++v)
    for (std::size_t i = 0; i < 100; ++i)
      if (out.view_index(i, v) == 0.0)
        for (std::size_t j = 0; j < out.views[v].cols(); ++j) CHECK(out.views[v](i, j) == 0.0);
}

TEST_CASE("simulate_incompleteness: label masking hides positives and negatives separately") {
  MultiViewDataset data = tiny_complete(100, 2, 1, 9);
  data.labels = Matrix(100, 1);
  for (std::size_t i = 0; i < 10; ++i) data.labels(i, 0) = 1.0;  // 10 positives, 90 negatives
  data.label_index = Matrix::full(100, 1, 1.0);
  const MultiViewDataset out = simulate_incompleteness(data, {0.0, 0.5, 13});
  std::size_t masked_pos = 0, masked_neg = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    if (out.label_index(i, 0) == 0.0) {
      (data.labels(i, 0) == 1.0 ? masked_pos : masked_neg) += 1;
      CHECK(out.labels(i, 0) == 0.0);  // hidden labels stored as zero
    }
  }
  CHECK(masked_pos == 5);
  CHECK(masked_neg == 45);
}

TEST_CASE("simulate_incompleteness: deterministic per seed and keeps full labels") {
  const MultiViewDataset data = tiny_complete(40, 3, 4, 2);
  const MultiViewDataset a = simulate_incompleteness(data, {0.5, 0.5, 3});
  const MultiViewDataset b = simulate_incompleteness(data, {0.5, 0.5, 3});
  CHECK(a.view_index == b.view_index);
  CHECK(a.label_index == b.label_index);
  CHECK(a.labels == b.labels);
  REQUIRE(a.complete_labels.has_value());
  CHECK(*a.complete_labels == data.labels);
}

TEST_CASE("simulate_incompleteness: infeasible view rate") {
  const MultiViewDataset data = tiny_complete(10, 2, 3);
  CHECK_THROWS_AS(simulate_incompleteness(data, {0.9, 0.0, 0}), TrainError);
}

TEST_CASE("simulate_incompleteness rejects an already incomplete input") {
  MultiViewDataset data = tiny_complete(10, 2, 3);
  data.view_index(0, 0) = 0.0;
  for (std::size_t j = 0; j < data.views[0].cols(); ++j) data.views[0](0, j) = 0.0;
  CHECK_THROWS_AS(simulate_incompleteness(data, {0.1, 0.1, 0}), ContractError);
}

TEST_CASE("split: sizes, determinism, partition") {
  const MultiViewDataset data = tiny_complete(10, 2, 3, 21);
  auto [train, test] = split(data, {0.7, 5});
  CHECK(train.num_samples() == 7);
  CHECK(test.num_samples() == 3);

  auto [train2, test2] = split(data, {0.7, 5});
  CHECK(train.views[0] == train2.views[0]);
  CHECK(test.views[0] == test2.views[0]);

  // union of the rows is the whole set, intersection empty
  std::multiset<double> seen;
  for (std::size_t i = 0; i < 7; ++i) seen.insert(train.views[0](i, 0));
  for (std::size_t i = 0; i < 3; ++i) seen.insert(test.views[0](i, 0));
  std::multiset<double> expected;
  for (std::size_t i = 0; i < 10; ++i) expected.insert(data.views[0](i, 0));
  CHECK(seen == expected);
}

TEST_CASE("split: test side gets complete labels and all-ones label index") {
  const MultiViewDataset complete = tiny_complete(30, 2, 3, 33);
  const MultiViewDataset weak = simulate_incompleteness(complete, {0.5, 0.5, 1});
  auto [train, test] = split(weak, {0.7, 2});
  for (double v : test.label_index.data()) CHECK(v == 1.0);
  // test labels match the pre-masking ground truth rows; train keeps the weak ones
  bool train_has_masked = false;
  for (double v : train.label_index.data()) train_has_masked = train_has_masked || v == 0.0;
  CHECK(train_has_masked);
  // test W still reflects missing views
  bool test_has_missing_view = false;
  for (double v : test.view_index.data()) test_has_missing_view = test_has_missing_view || v == 0.0;
  CHECK(test_has_missing_view);
}

TEST_CASE("split: empty side is rejected") {
  const MultiViewDataset data = tiny_complete(3, 2, 2);
  CHECK_THROWS_AS(split(data, {0.05, 0}), ContractError);
}

TEST_CASE("generate_synthetic satisfies dataset invariants") {
  SyntheticSpec spec;
  spec.n = 600;
  spec.m = 2;
  spec.c = 5;
  spec.seed = 17;
  const MultiViewDataset data = generate_synthetic(spec);
  data.validate();
  CHECK(data.num_samples() == 600);
  CHECK(data.num_views() == 2);
  CHECK(data.num_labels() == 5);
  // every sample carries 1-3 labels
  for (std::size_t i = 0; i < data.num_samples(); ++i) {
    double k = 0;
    for (std::size_t j = 0; j < 5; ++j) k += data.labels(i, j);
    CHECK(k >= 1.0);
    CHECK(k <= 3.0);
  }
}

TEST_CASE("generate_synthetic: zero noise makes same label set give same rows") {
  SyntheticSpec spec;
  spec.n = 200;
  spec.m = 2;
  spec.c = 3;
  spec.noise = 0.0;
  spec.latent_dim = 4;
  spec.seed = 8;
  const MultiViewDataset data = generate_synthetic(spec);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (std::size_t k = i + 1; k < spec.n; ++k) {
      bool same_labels = true;
      for (std::size_t j = 0; j < spec.c; ++j)
        same_labels = same_labels && data.labels(i, j) == data.labels(k, j);
      if (!same_labels) continue;
      for (std::size_t v = 0; v < spec.m; ++v)
        for (std::size_t j = 0; j < data.views[v].cols(); ++j)
          CHECK(data.views[v](i, j) == data.views[v](k, j));
    }
  }
}

TEST_CASE("generate_synthetic: deterministic per seed") {
  SyntheticSpec spec;
  spec.seed = 4;
  const MultiViewDataset a = generate_synthetic(spec);
  const MultiViewDataset b = generate_synthetic(spec);
  CHECK(a.views[0] == b.views[0]);
  CHECK(a.labels == b.labels);
}

TEST_CASE("generate_synthetic: latent_dim below c is rejected") {
  SyntheticSpec spec;
  spec.c = 5;
  spec.latent_dim = 3;
  CHECK_THROWS_AS(generate_synthetic(spec), ContractError);
}

TEST_CASE("generate_synthetic: a linear probe on clean concatenated views is strong") {
  SyntheticSpec spec;
  spec.n = 600;
  spec.m = 2;
  spec.c = 5;
  spec.seed = 23;
  const MultiViewDataset data = generate_synthetic(spec);
  auto [train, test] = split(data, {0.7, 1});
  const Matrix train_x = concat_views(train);
  const Matrix test_x = concat_views(test);
  const Matrix scores = logistic_baseline_scores(train_x, train.labels, train.label_index,
                                                 test_x, 1500, 0.5);
  CHECK(average_precision(scores, test.labels) > 0.9);
}
