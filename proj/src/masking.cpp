#include "mtd/masking.hpp"

#include <cmath>
#include <string>

#include "mtd/errors.hpp"
#include "mtd/rng.hpp"

namespace mtd {

std::size_t fragment_length(double rate, std::size_t dim) {
  const double exact = rate * static_cast<double>(dim);
  double rounded = std::nearbyint(exact);  // default FE_TONEAREST ties to even
  if (std::abs(exact - std::floor(exact) - 0.5) < 1e-12) {
    // make the tie rule explicit rather than trusting the FP environment
    const double lo = std::floor(exact);
    rounded = (static_cast<long long>(lo) % 2 == 0) ? lo : lo + 1.0;
  }
  return static_cast<std::size_t>(rounded);
}

MaskSet build_masks(std::size_t n, const std::vector<std::size_t>& dims, const MaskSpec& spec) {
  if (spec.rate < 0.0 || spec.rate >= 1.0) {
    throw ContractError("build_masks: mask rate must lie in [0, 1), got " +
                        std::to_string(spec.rate));
  }
  Rng rng(spec.seed);
  MaskSet set;
  set.masks.reserve(dims.size());
  for (std::size_t v = 0; v < dims.size(); ++v) {
    const std::size_t d = dims[v];
    std::size_t len = fragment_length(spec.rate, d);
    if (spec.inclusive_fragment && len > 0) ++len;
    if (len >= d) {
      throw ContractError("build_masks: view " + std::to_string(v) + " run length " +
                          std::to_string(len) + " must stay below dimension " +
                          std::to_string(d));
    }
    Matrix m = Matrix::full(n, d, 1.0);
    if (len > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t start = static_cast<std::size_t>(rng.below(d - len + 1));
        for (std::size_t j = start; j < start + len; ++j) m(i, j) = 0.0;
      }
    }
    set.masks.push_back(std::move(m));
  }
  return set;
}

std::vector<Matrix> apply_masks(const std::vector<Matrix>& views, const MaskSet& masks) {
  if (views.size() != masks.masks.size()) {
    throw ShapeError("apply_masks: " + std::to_string(views.size()) + " views vs " +
                     std::to_string(masks.masks.size()) + " masks");
  }
  std::vector<Matrix> out;
  out.reserve(views.size());
  for (std::size_t v = 0; v < views.size(); ++v) {
    if (!views[v].same_shape(masks.masks[v])) {
      throw ShapeError("apply_masks: view " + std::to_string(v) + " is " +
                       views[v].shape_str() + " but mask is " + masks.masks[v].shape_str());
    }
    out.push_back(hadamard(views[v], masks.masks[v]));
  }
  return out;
}

}  // namespace mtd
