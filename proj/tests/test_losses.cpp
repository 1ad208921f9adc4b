#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "mtd/errors.hpp"
#include "mtd/graph_reg.hpp"
#include "mtd/losses.hpp"
#include "mtd/model.hpp"
#include "mtd/rng.hpp"
#include "mtd/tape.hpp"
#include "support.hpp"

using namespace mtd;
using namespace mtd::testsupport;

namespace {

// Reference contrastive value computed the slow way: explicit loops over
// samples and view pairs with plain scalar arithmetic.
double contrastive_reference(const std::vector<Matrix>& s, const std::vector<Matrix>& o,
                             const Matrix& w) {
  const std::size_t m = s.size();
  const std::size_t b = s[0].rows();
  auto cosine = [](const Matrix& a, std::size_t i, const Matrix& c, std::size_t k) {
    double dot = 0.0, na = 0.0, nc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      dot += a(i, j) * c(k, j);
      na += a(i, j) * a(i, j);
      nc += c(k, j) * c(k, j);
    }
    return dot / (std::max(std::sqrt(na), 1e-12) * std::max(std::sqrt(nc), 1e-12));
  };
  double total = 0.0;
  std::size_t contributing = 0;
  for (std::size_t i = 0; i < b; ++i) {
    double ni = 0.0;
    for (std::size_t v = 0; v < m; ++v) ni += w(i, v);
    if (ni < 2.0) continue;
    double neg = 0.0, pos = 0.0;
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t v = 0; v < m; ++v) {
        if (w(i, u) * w(i, v) != 1.0) continue;
        const double so = cosine(s[u], i, o[v], i);
        neg += 2.0 * so * so;
        if (u != v) {
          const double oo = cosine(o[u], i, o[v], i);
          neg += oo * oo;
          const double ss = cosine(s[u], i, s[v], i);
          pos += (ss + 1.0) / 2.0;
        }
      }
    }
    neg /= 3.0 * ni * ni - ni;
    pos /= ni * ni - ni;
    total += neg / std::max(pos, 1e-8);
    ++contributing;
  }
  return contributing == 0 ? 0.0 : total / static_cast<double>(contributing);
}

}  // namespace

TEST_CASE("contrastive: hand-enumerated two-view example") {
  // s1 = s2 = (1,0); o1 = (0,1); o2 = (0,-1); both views available
  Tape tape;
  std::vector<Value> s = {tape.leaf(Matrix{{1.0, 0.0}}), tape.leaf(Matrix{{1.0, 0.0}})};
  std::vector<Value> o = {tape.leaf(Matrix{{0.0, 1.0}}), tape.leaf(Matrix{{0.0, -1.0}})};
  const Matrix w = Matrix::full(1, 2, 1.0);
  const double loss = contrastive_loss(s, o, w).value()(0, 0);
  // negatives: all s-o cosines are 0; o-o ordered pairs give (-1)^2 twice
  // -> [2*0 + 2] / (3*4 - 2) = 0.2; positives: ((1+1)/2)*2 / (4-2) = 1
  CHECK(loss == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("contrastive: aligned shared features and orthogonal channels give zero") {
  Tape tape;
  std::vector<Value> s = {tape.leaf(Matrix{{1.0, 0.0}}), tape.leaf(Matrix{{1.0, 0.0}})};
  std::vector<Value> o = {tape.leaf(Matrix{{0.0, 1.0}}), tape.leaf(Matrix{{0.0, 1.0}})};
  // o-o pair has cosine 1 though -> not zero; use orthogonal o pair instead
  Tape t2;
  std::vector<Value> s2 = {t2.leaf(Matrix{{1.0, 0.0, 0.0}}), t2.leaf(Matrix{{1.0, 0.0, 0.0}})};
  std::vector<Value> o2 = {t2.leaf(Matrix{{0.0, 1.0, 0.0}}), t2.leaf(Matrix{{0.0, 0.0, 1.0}})};
  const double loss = contrastive_loss(s2, o2, Matrix::full(1, 2, 1.0)).value()(0, 0);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("contrastive: samples with fewer than two views contribute nothing") {
  Rng rng(40);
  Tape tape;
  std::vector<Value> s = {tape.leaf(random_matrix(3, 4, rng)), tape.leaf(random_matrix(3, 4, rng))};
  std::vector<Value> o = {tape.leaf(random_matrix(3, 4, rng)), tape.leaf(random_matrix(3, 4, rng))};
  Matrix w{{1.0, 0.0}, {0.0, 1.0}, {1.0, 0.0}};  // every sample single-view
  CHECK(contrastive_loss(s, o, w).value()(0, 0) == 0.0);
}

TEST_CASE("contrastive: matches the slow reference on random instances") {
  Rng rng(41);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t m = 2 + static_cast<std::size_t>(rng.below(2));
    const std::size_t b = 1 + static_cast<std::size_t>(rng.below(6));
    std::vector<Matrix> s0, o0;
    for (std::size_t v = 0; v < m; ++v) {
      s0.push_back(random_matrix(b, 5, rng));
      o0.push_back(random_matrix(b, 5, rng));
    }
    const Matrix w = random_index_matrix(b, m, rng);
    Tape tape;
    std::vector<Value> s, o;
    for (std::size_t v = 0; v < m; ++v) {
      s.push_back(tape.leaf(s0[v]));
      o.push_back(tape.leaf(o0[v]));
    }
    const double fast = contrastive_loss(s, o, w).value()(0, 0);
    const double slow = contrastive_reference(s0, o0, w);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
    CHECK(fast >= 0.0);
  }
}

TEST_CASE("contrastive: invariant to positive rescaling of one instance") {
  Rng rng(42);
  std::vector<Matrix> s0 = {random_matrix(2, 4, rng), random_matrix(2, 4, rng),
                            random_matrix(2, 4, rng)};
  std::vector<Matrix> o0 = {random_matrix(2, 4, rng), random_matrix(2, 4, rng),
                            random_matrix(2, 4, rng)};
  const Matrix w = Matrix::full(2, 3, 1.0);
  auto eval = [&](const std::vector<Matrix>& sv) {
    Tape tape;
    std::vector<Value> s, o;
    for (std::size_t v = 0; v < 3; ++v) {
      s.push_back(tape.leaf(sv[v]));
      o.push_back(tape.leaf(o0[v]));
    }
    return contrastive_loss(s, o, w).value()(0, 0);
  };
  const double base = eval(s0);
  std::vector<Matrix> scaled = s0;
  for (std::size_t j = 0; j < 4; ++j) scaled[1](0, j) *= 37.5;
  CHECK(std::abs(eval(scaled) - base) < 1e-9);
}

TEST_CASE("contrastive: gradient matches finite differences") {
  Rng rng(43);
  std::vector<Matrix> s0 = {random_matrix(3, 4, rng), random_matrix(3, 4, rng)};
  std::vector<Matrix> o0 = {random_matrix(3, 4, rng), random_matrix(3, 4, rng)};
  Matrix w{{1.0, 1.0}, {1.0, 0.0}, {1.0, 1.0}};
  Tape tape;
  std::vector<Value> s = {tape.leaf(s0[0]), tape.leaf(s0[1])};
  std::vector<Value> o = {tape.leaf(o0[0]), tape.leaf(o0[1])};
  tape.backward(contrastive_loss(s, o, w));

  const Matrix fd = finite_difference(
      [&](const Matrix& probe) {
        Tape t;
        std::vector<Value> ss = {t.leaf(probe), t.leaf(s0[1])};
        std::vector<Value> oo = {t.leaf(o0[0]), t.leaf(o0[1])};
        return contrastive_loss(ss, oo, w).value()(0, 0);
      },
      s0[0]);
  const auto check = compare_gradients(s[0].grad(), fd);
  CHECK_MESSAGE(check.ok, check.detail);
}

TEST_CASE("contrastive: batch-sum switch scales by the contributing count") {
  Rng rng(44);
  std::vector<Matrix> s0 = {random_matrix(4, 3, rng), random_matrix(4, 3, rng)};
  std::vector<Matrix> o0 = {random_matrix(4, 3, rng), random_matrix(4, 3, rng)};
  const Matrix w = Matrix::full(4, 2, 1.0);
  Tape tape;
  std::vector<Value> s = {tape.leaf(s0[0]), tape.leaf(s0[1])};
  std::vector<Value> o = {tape.leaf(o0[0]), tape.leaf(o0[1])};
  const double mean_form = contrastive_loss(s, o, w, false).value()(0, 0);
  const double sum_form = contrastive_loss(s, o, w, true).value()(0, 0);
  CHECK(sum_form == doctest::Approx(4.0 * mean_form).epsilon(1e-12));
}

TEST_CASE("reconstruction: perfect reconstruction gives zero") {
  Rng rng(50);
  const Matrix x = random_matrix(3, 5, rng);
  Tape tape;
  std::vector<Value> recon = {tape.leaf(x)};
  CHECK(reconstruction_loss(recon, {x}, Matrix::full(3, 1, 1.0)).value()(0, 0) == 0.0);
}

TEST_CASE("reconstruction: hand value") {
  // m=1, b=2, d=2, error rows (1,0) and (0,2), all views available
  Tape tape;
  Matrix target(2, 2);
  Matrix output{{1.0, 0.0}, {0.0, 2.0}};
  std::vector<Value> recon = {tape.leaf(output)};
  const double loss = reconstruction_loss(recon, {target}, Matrix::full(2, 1, 1.0)).value()(0, 0);
  CHECK(loss == doctest::Approx(1.25).epsilon(1e-12));
}

TEST_CASE("reconstruction: W gate hides missing instances entirely") {
  Rng rng(51);
  const Matrix x = random_matrix(4, 3, rng);
  Matrix w(4, 1);
  w(0, 0) = 1.0;
  w(1, 0) = 0.0;
  w(2, 0) = 1.0;
  w(3, 0) = 0.0;
  Matrix output = random_matrix(4, 3, rng);
  Tape tape;
  const double base =
      reconstruction_loss({tape.leaf(output)}, {x}, w).value()(0, 0);
  // overwrite a masked row's target: loss unchanged
  Matrix x2 = x;
  for (std::size_t j = 0; j < 3; ++j) x2(1, j) = 1000.0 * rng.uniform();
  Tape t2;
  const double moved = reconstruction_loss({t2.leaf(output)}, {x2}, w).value()(0, 0);
  CHECK(base == moved);
}

TEST_CASE("reconstruction: gradient matches finite differences") {
  Rng rng(52);
  const Matrix x = random_matrix(3, 4, rng);
  const Matrix out0 = random_matrix(3, 4, rng);
  Matrix w(3, 1);
  w(0, 0) = 1.0;
  w(1, 0) = 1.0;
  w(2, 0) = 0.0;
  Tape tape;
  Value out_leaf = tape.leaf(out0);
  tape.backward(reconstruction_loss({out_leaf}, {x}, w));
  const Matrix fd = finite_difference(
      [&](const Matrix& probe) {
        Tape t;
        return reconstruction_loss({t.leaf(probe)}, {x}, w).value()(0, 0);
      },
      out0);
  CHECK(compare_gradients(out_leaf.grad(), fd).ok);
}

TEST_CASE("classification: P = Y (clamped) is near zero") {
  Tape tape;
  Matrix y{{1.0, 0.0}, {0.0, 1.0}};
  Matrix p{{1.0 - 1e-13, 1e-13}, {1e-13, 1.0 - 1e-13}};
  const double loss =
      classification_loss(tape.leaf(p), y, Matrix::full(2, 2, 1.0)).value()(0, 0);
  CHECK(loss == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("classification: fully masked labels give zero") {
  Rng rng(60);
  Tape tape;
  const Matrix p = random_matrix(3, 4, rng, 0.01, 0.99);
  const Matrix y = random_binary_matrix(3, 4, rng, 0.5);
  Matrix all_zero_y = y;
  for (double& v : all_zero_y.data()) v = 0.0;  // Y must be 0 where G = 0
  CHECK(classification_loss(tape.leaf(p), all_zero_y, Matrix(3, 4)).value()(0, 0) == 0.0);
}

TEST_CASE("classification: hand value log 2") {
  Tape tape;
  Matrix y{{1.0, 0.0}};
  Matrix p{{0.5, 0.5}};
  const double loss =
      classification_loss(tape.leaf(p), y, Matrix::full(1, 2, 1.0)).value()(0, 0);
  CHECK(loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("classification: gradient matches finite differences through a sigmoid") {
  Rng rng(61);
  const Matrix logits0 = random_matrix(3, 4, rng);
  const Matrix y = random_binary_matrix(3, 4, rng, 0.4);
  const Matrix g = random_binary_matrix(3, 4, rng, 0.7);
  Matrix y_masked = y;
  for (std::size_t k = 0; k < y.size(); ++k) y_masked.data()[k] = y.data()[k] * g.data()[k];

  Tape tape;
  Value logits = tape.leaf(logits0);
  tape.backward(classification_loss(sigmoid(logits), y_masked, g));
  const Matrix fd = finite_difference(
      [&](const Matrix& probe) {
        Tape t;
        return classification_loss(sigmoid(t.leaf(probe)), y_masked, g).value()(0, 0);
      },
      logits0);
  CHECK(compare_gradients(logits.grad(), fd).ok);
}

TEST_CASE("total: zero weights leave only the classification term") {
  Tape tape;
  Value mc = tape.leaf(Matrix{{0.7}});
  Value gc = tape.leaf(Matrix{{2.0}});
  Value ccc = tape.leaf(Matrix{{3.0}});
  Value re = tape.leaf(Matrix{{4.0}});
  auto [total, breakdown] = total_loss(mc, gc, ccc, re, LossWeights{0.0, 0.0, 0.0});
  CHECK(total.value()(0, 0) == 0.7);
  CHECK(breakdown.total == 0.7);
}

TEST_CASE("total: unit weights sum the parts; breakdown identity holds") {
  Tape tape;
  Value mc = tape.leaf(Matrix{{1.0}});
  Value gc = tape.leaf(Matrix{{2.0}});
  Value ccc = tape.leaf(Matrix{{3.0}});
  Value re = tape.leaf(Matrix{{4.0}});
  auto [total, b] = total_loss(mc, gc, ccc, re, LossWeights{1.0, 1.0, 1.0});
  CHECK(total.value()(0, 0) == doctest::Approx(10.0).epsilon(1e-15));
  const double recombined = b.classification + 1.0 * b.graph + 1.0 * b.contrastive + 1.0 * b.reconstruction;
  CHECK(std::abs(b.total - recombined) < 1e-12);
  CHECK_THROWS_AS(total_loss(mc, gc, ccc, re, LossWeights{-0.1, 0.0, 0.0}), ContractError);
}

// Full-pipeline fixture shared by the independence and gradient tests.
namespace {

struct PipelineFixture {
  ModelConfig cfg;
  MtdModel model;
  std::vector<Matrix> views;
  Matrix w, y, g;

  explicit PipelineFixture(std::uint64_t seed) : model(make_model(seed)) {
    Rng rng(seed + 1000);
    const std::size_t b = 6;
    for (std::size_t d : cfg.view_dims) views.push_back(random_matrix(b, d, rng));
    w = random_index_matrix(b, cfg.view_dims.size(), rng);
    y = random_binary_matrix(b, cfg.num_labels, rng, 0.5);
    g = random_binary_matrix(b, cfg.num_labels, rng, 0.7);
    for (std::size_t i = 0; i < b; ++i) {
      for (std::size_t v = 0; v < cfg.view_dims.size(); ++v)
        if (w(i, v) == 0.0)
          for (std::size_t j = 0; j < views[v].cols(); ++j) views[v](i, j) = 0.0;
      for (std::size_t j = 0; j < cfg.num_labels; ++j)
        if (g(i, j) == 0.0) y(i, j) = 0.0;
    }
  }

  MtdModel make_model(std::uint64_t seed) {
    cfg.view_dims = {5, 7, 4};
    cfg.embed_dim = 4;
    cfg.num_labels = 3;
    cfg.hidden_widths = {6};
    return init_model(cfg, seed);
  }

  // Evaluates all losses for given data; returns the breakdown and, if
  // `grads` is non-null, the gradients of the total in parameter order.
  LossBreakdown run(const std::vector<Matrix>& views_in, const Matrix& y_in, const Matrix& g_in,
                    std::vector<Matrix>* grads) const {
    Tape tape;
    BoundModel bound = bind_parameters(tape, model);
    ForwardOutputs out = forward(tape, model, bound, views_in, w);
    Value l_mc = classification_loss(out.predictions, y_in, g_in);
    const SimilarityGraph graph = build_graph(y_in, g_in);
    Value l_gc = graph_loss(out.z, graph);
    Value l_ccc = contrastive_loss(out.shared, out.proprietary, w);
    Value l_re = reconstruction_loss(out.reconstructed, views_in, w);
    auto [total, breakdown] = total_loss(l_mc, l_gc, l_ccc, l_re, LossWeights{});
    if (grads != nullptr) {
      tape.backward(total);
      for (const Value& leaf : bound.flat) grads->push_back(leaf.grad());
    }
    return breakdown;
  }
};

}  // namespace

TEST_CASE("masked-entry independence: losses bit-identical, gradients within 1e-12") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const PipelineFixture fx(seed);
    std::vector<Matrix> base_grads;
    const LossBreakdown base = fx.run(fx.views, fx.y, fx.g, &base_grads);

    Rng scribble(seed + 999);
    std::vector<Matrix> views2 = fx.views;
    Matrix y2 = fx.y;
    bool changed = false;
    for (std::size_t v = 0; v < views2.size(); ++v)
      for (std::size_t i = 0; i < views2[v].rows(); ++i)
        if (fx.w(i, v) == 0.0) {
          changed = true;
          for (std::size_t j = 0; j < views2[v].cols(); ++j)
            views2[v](i, j) = scribble.uniform(-5.0, 5.0);
        }
    for (std::size_t i = 0; i < y2.rows(); ++i)
      for (std::size_t j = 0; j < y2.cols(); ++j)
        if (fx.g(i, j) == 0.0) {
          changed = true;
          y2(i, j) = scribble.uniform() < 0.5 ? 0.0 : 1.0;
        }
    REQUIRE(changed);

    std::vector<Matrix> moved_grads;
    const LossBreakdown moved = fx.run(views2, y2, fx.g, &moved_grads);

    CHECK(base.classification == moved.classification);
    CHECK(base.graph == moved.graph);
    CHECK(base.contrastive == moved.contrastive);
    CHECK(base.reconstruction == moved.reconstruction);
    CHECK(base.total == moved.total);
    REQUIRE(base_grads.size() == moved_grads.size());
    for (std::size_t k = 0; k < base_grads.size(); ++k)
      CHECK(max_abs_diff(base_grads[k], moved_grads[k]) <= 1e-12);
  }
}

TEST_CASE("all four losses are nonnegative on random pipelines") {
  for (std::uint64_t seed = 100; seed < 106; ++seed) {
    const PipelineFixture fx(seed);
    const LossBreakdown b = fx.run(fx.views, fx.y, fx.g, nullptr);
    CHECK(b.classification >= 0.0);
    CHECK(b.graph >= -1e-15);
    CHECK(b.contrastive >= 0.0);
    CHECK(b.reconstruction >= 0.0);
  }
}

TEST_CASE("optimizing the contrastive loss alone decouples the channels") {
  // Free embeddings, no encoders. The loss is scale-invariant per row, so
  // the embeddings are kept on the unit sphere; momentum SGD with a step
  // drop near the end both aligns the shared features and parks the
  // shared-proprietary similarities at zero.
  const std::size_t m = 3, b = 4, d = 8;
  Rng rng(7);
  std::vector<Matrix> s(m), o(m), vel_s(m), vel_o(m);
  for (std::size_t v = 0; v < m; ++v) {
    s[v] = random_matrix(b, d, rng, -0.5, 0.5);
    o[v] = random_matrix(b, d, rng, -0.5, 0.5);
    vel_s[v] = Matrix(b, d);
    vel_o[v] = Matrix(b, d);
  }
  auto renorm = [](Matrix& x) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
      double n = 0.0;
      for (std::size_t j = 0; j < x.cols(); ++j) n += x(i, j) * x(i, j);
      n = std::max(std::sqrt(n), 1e-12);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) /= n;
    }
  };
  for (std::size_t v = 0; v < m; ++v) {
    renorm(s[v]);
    renorm(o[v]);
  }
  const Matrix w = Matrix::full(b, m, 1.0);
  const double momentum = 0.9;
  for (int step = 1; step <= 500; ++step) {
    const double lr = step <= 400 ? 40.0 : 1.0;
    Tape tape;
    std::vector<Value> sv, ov;
    for (std::size_t v = 0; v < m; ++v) {
      sv.push_back(tape.leaf(s[v]));
      ov.push_back(tape.leaf(o[v]));
    }
    tape.backward(contrastive_loss(sv, ov, w));
    for (std::size_t v = 0; v < m; ++v) {
      for (std::size_t k = 0; k < s[v].size(); ++k) {
        vel_s[v].data()[k] = momentum * vel_s[v].data()[k] - lr * sv[v].grad().data()[k];
        s[v].data()[k] += vel_s[v].data()[k];
        vel_o[v].data()[k] = momentum * vel_o[v].data()[k] - lr * ov[v].grad().data()[k];
        o[v].data()[k] += vel_o[v].data()[k];
      }
      renorm(s[v]);
      renorm(o[v]);
    }
  }
  auto cosine = [](const Matrix& a, std::size_t i, const Matrix& c, std::size_t k) {
    double dot = 0.0, na = 0.0, nc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) {
      dot += a(i, j) * c(k, j);
      na += a(i, j) * a(i, j);
      nc += c(k, j) * c(k, j);
    }
    return dot / std::max(std::sqrt(na * nc), 1e-12);
  };
  double ss_sum = 0.0, so_sum = 0.0;
  std::size_t ss_count = 0, so_count = 0;
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t u = 0; u < m; ++u) {
      for (std::size_t v = 0; v < m; ++v) {
        if (u != v) {
          ss_sum += cosine(s[u], i, s[v], i);
          ++ss_count;
        }
        so_sum += std::abs(cosine(s[u], i, o[v], i));
        ++so_count;
      }
    }
  }
  CHECK(ss_sum / static_cast<double>(ss_count) > 0.95);
  CHECK(so_sum / static_cast<double>(so_count) < 0.1);
}
