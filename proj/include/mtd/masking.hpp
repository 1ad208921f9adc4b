#ifndef MTD_MASKING_HPP
#define MTD_MASKING_HPP

#include <cstdint>
#include <vector>

#include "mtd/matrix.hpp"

namespace mtd {

// Random fragment masking: every instance has one contiguous run of feature
// dimensions zeroed per epoch. Training-time augmentation only; inference
// consumes unmasked inputs.
struct MaskSpec {
  double rate = 0.25;  // fraction of each instance's dimensions zeroed
  std::uint64_t seed = 0;
  // The fragment covers fragment_length(d_v) elements, half-open [b, b+l).
  // The inclusive switch extends the run to l+1 elements for experimentation;
  // the stated rate only holds exactly for the default.
  bool inclusive_fragment = false;
};

// Per-view length of the zero run: round(rate * dim), half-to-even.
std::size_t fragment_length(double rate, std::size_t dim);

struct MaskSet {
  std::vector<Matrix> masks;  // one {0,1}^{n x d_v} matrix per view
};

// Fresh independent masks for each view and row; deterministic per seed.
// Throws ContractError when a view's run length would reach its dimension.
MaskSet build_masks(std::size_t n, const std::vector<std::size_t>& dims, const MaskSpec& spec);

// X'^(v) = X^(v) (x) M^(v); inputs unmodified.
std::vector<Matrix> apply_masks(const std::vector<Matrix>& views, const MaskSet& masks);

}  // namespace mtd

#endif  // MTD_MASKING_HPP
