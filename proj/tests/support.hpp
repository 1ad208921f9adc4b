#ifndef MTD_TESTS_SUPPORT_HPP
#define MTD_TESTS_SUPPORT_HPP

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "mtd/matrix.hpp"
#include "mtd/rng.hpp"

namespace mtd::testsupport {

// Central finite differences of a scalar function with respect to one input
// matrix. The function is re-run from scratch for every probe, so this is
// independent of any recorded adjoint rules.
inline Matrix finite_difference(const std::function<double(const Matrix&)>& f, const Matrix& at,
                                double h = 1e-6) {
  Matrix grad(at.rows(), at.cols());
  Matrix probe = at;
  for (std::size_t k = 0; k < at.size(); ++k) {
    const double saved = probe.data()[k];
    probe.data()[k] = saved + h;
    const double up = f(probe);
    probe.data()[k] = saved - h;
    const double down = f(probe);
    probe.data()[k] = saved;
    grad.data()[k] = (up - down) / (2.0 * h);
  }
  return grad;
}

struct GradCheckResult {
  bool ok = true;
  double worst_rel_err = 0.0;
  std::string detail;
};

// rel err < tol wherever |fd| > floor; entries below the floor are compared
// absolutely against the same floor.
inline GradCheckResult compare_gradients(const Matrix& analytic, const Matrix& fd,
                                         double tol = 1e-4, double floor = 1e-8) {
  GradCheckResult result;
  for (std::size_t k = 0; k < fd.size(); ++k) {
    const double a = analytic.data()[k];
    const double n = fd.data()[k];
    if (std::abs(n) > floor) {
      const double rel = std::abs(a - n) / std::abs(n);
      result.worst_rel_err = std::max(result.worst_rel_err, rel);
      if (rel >= tol) {
        result.ok = false;
        result.detail = "entry " + std::to_string(k) + ": analytic " + std::to_string(a) +
                        " vs fd " + std::to_string(n);
      }
    }
  }
  return result;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& rng, double lo = -1.0,
                            double hi = 1.0) {
  return Matrix::uniform(rows, cols, lo, hi, rng);
}

// Random {0,1} matrix with every row guaranteed at least one 1.
inline Matrix random_index_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                                  double keep_probability = 0.6) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.uniform() < keep_probability ? 1.0 : 0.0;
    bool any = false;
    for (std::size_t j = 0; j < cols; ++j) any = any || m(i, j) == 1.0;
    if (!any) m(i, static_cast<std::size_t>(rng.below(cols))) = 1.0;
  }
  return m;
}

inline Matrix random_binary_matrix(std::size_t rows, std::size_t cols, Rng& rng,
                                   double one_probability = 0.5) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.uniform() < one_probability ? 1.0 : 0.0;
  return m;
}

}  // namespace mtd::testsupport

#endif  // MTD_TESTS_SUPPORT_HPP
