#ifndef MTD_IO_HPP
#define MTD_IO_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "mtd/matrix.hpp"

namespace mtd {

// MVF1 record: magic "MVF1", u32 LE rows, u32 LE cols, rows*cols f64 LE
// row-major values. Used both for standalone view files and as the payload
// encoding inside model checkpoints.
void write_mvf(std::ostream& out, const Matrix& m);
Matrix read_mvf(std::istream& in, const std::string& context);

void write_mvf_file(const std::string& path, const Matrix& m);
Matrix read_mvf_file(const std::string& path);

// Plain numeric CSV, no header, one row per sample.
void write_csv_matrix(const std::string& path, const Matrix& m);
Matrix read_csv_matrix(const std::string& path);

// CSV of exactly 0/1 integers; throws LoadError naming file and row otherwise.
Matrix read_binary_csv(const std::string& path);
void write_binary_csv(const std::string& path, const Matrix& m);

// Little-endian scalar helpers shared with the checkpoint writer.
void write_u32(std::ostream& out, std::uint32_t v);
std::uint32_t read_u32(std::istream& in, const std::string& context);
void write_f64(std::ostream& out, double v);
double read_f64(std::istream& in, const std::string& context);

}  // namespace mtd

#endif  // MTD_IO_HPP
