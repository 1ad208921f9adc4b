#ifndef MTD_MATRIX_HPP
#define MTD_MATRIX_HPP

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

namespace mtd {

class Rng;

// Dense row-major f64 matrix. Constructors reject non-finite values; the
// element accessors are unchecked for speed.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix full(std::size_t rows, std::size_t cols, double value);
  static Matrix identity(std::size_t n);
  static Matrix uniform(std::size_t rows, std::size_t cols, double lo, double hi, Rng& rng);
  static Matrix gaussian(std::size_t rows, std::size_t cols, double mean, double stddev, Rng& rng);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_str() const;

  // Throws NumericError naming `context` if any entry is NaN or Inf.
  void ensure_finite(const char* context) const;

  void fill(double value);
  Matrix transposed() const;
  Matrix row(std::size_t i) const;

  bool operator==(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Plain (untracked) arithmetic used by data handling, metrics and tests.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix hadamard(const Matrix& a, const Matrix& b);
Matrix operator*(double k, const Matrix& a);
double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace mtd

#endif  // MTD_MATRIX_HPP
