#include "mtd/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "mtd/errors.hpp"

namespace mtd {

namespace {

constexpr char kMvfMagic[4] = {'M', 'V', 'F', '1'};

[[noreturn]] void fail(const std::string& context, const std::string& what) {
  throw LoadError(context + ": " + what);
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) {
  char buf[4];
  buf[0] = static_cast<char>(v & 0xff);
  buf[1] = static_cast<char>((v >> 8) & 0xff);
  buf[2] = static_cast<char>((v >> 16) & 0xff);
  buf[3] = static_cast<char>((v >> 24) & 0xff);
  out.write(buf, 4);
}

std::uint32_t read_u32(std::istream& in, const std::string& context) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4)) fail(context, "truncated u32");
  return static_cast<std::uint32_t>(buf[0]) | (static_cast<std::uint32_t>(buf[1]) << 8) |
         (static_cast<std::uint32_t>(buf[2]) << 16) | (static_cast<std::uint32_t>(buf[3]) << 24);
}

void write_f64(std::ostream& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(buf, 8);
}

double read_f64(std::istream& in, const std::string& context) {
  unsigned char buf[8];
  if (!in.read(reinterpret_cast<char*>(buf), 8)) fail(context, "truncated f64");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

void write_mvf(std::ostream& out, const Matrix& m) {
  out.write(kMvfMagic, 4);
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data()) write_f64(out, v);
}

Matrix read_mvf(std::istream& in, const std::string& context) {
  char magic[4];
  if (!in.read(magic, 4)) fail(context, "truncated header");
  if (std::memcmp(magic, kMvfMagic, 4) != 0) fail(context, "bad magic, expected MVF1");
  const std::uint32_t rows = read_u32(in, context);
  const std::uint32_t cols = read_u32(in, context);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(rows) * cols);
  for (std::size_t i = 0; i < static_cast<std::size_t>(rows) * cols; ++i)
    values.push_back(read_f64(in, context));
  try {
    return Matrix(rows, cols, std::move(values));
  } catch (const NumericError& e) {
    fail(context, e.what());
  }
}

void write_mvf_file(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError(path + ": cannot open for writing");
  write_mvf(out, m);
  if (!out) throw LoadError(path + ": write failed");
}

Matrix read_mvf_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError(path + ": cannot open");
  return read_mvf(in, path);
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw LoadError(path + ": cannot open for writing");
  out.precision(17);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  if (!out) throw LoadError(path + ": write failed");
}

Matrix read_csv_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(path + ": cannot open");
  std::vector<double> values;
  std::size_t rows = 0, cols = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::size_t row_cols = 0;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        values.push_back(v);
      } catch (const std::exception&) {
        fail(path, "row " + std::to_string(rows + 1) + ": cannot parse '" + cell + "'");
      }
      ++row_cols;
    }
    if (rows == 0) {
      cols = row_cols;
    } else if (row_cols != cols) {
      fail(path, "row " + std::to_string(rows + 1) + ": expected " + std::to_string(cols) +
                     " columns, got " + std::to_string(row_cols));
    }
    ++rows;
  }
  if (rows == 0) fail(path, "empty file");
  try {
    return Matrix(rows, cols, std::move(values));
  } catch (const NumericError& e) {
    fail(path, e.what());
  }
}

Matrix read_binary_csv(const std::string& path) {
  Matrix m = read_csv_matrix(path);
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (v != 0.0 && v != 1.0) {
        fail(path, "row " + std::to_string(i + 1) + ": entry " + std::to_string(v) +
                       " is not 0 or 1");
      }
    }
  }
  return m;
}

void write_binary_csv(const std::string& path, const Matrix& m) {
  std::ofstream out(path);
  if (!out) throw LoadError(path + ": cannot open for writing");
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << static_cast<int>(m(i, j));
    }
    out << '\n';
  }
  if (!out) throw LoadError(path + ": write failed");
}

}  // namespace mtd
