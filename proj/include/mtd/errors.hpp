#ifndef MTD_ERRORS_HPP
#define MTD_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace mtd {

// Shape or dimension disagreement between operands.
class ShapeError : public std::runtime_error {
public:
  explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid numeric content (NaN/Inf, division by zero, non-binary entries).
class NumericError : public std::runtime_error {
public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// A caller violated an API precondition.
class ContractError : public std::runtime_error {
public:
  explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// File ingestion problems; message carries file and row context.
class LoadError : public std::runtime_error {
public:
  explicit LoadError(const std::string& msg) : std::runtime_error(msg) {}
};

// A metric could not be computed because every sample/label was degenerate.
class UndefinedMetricError : public std::runtime_error {
public:
  explicit UndefinedMetricError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training aborted (non-finite loss, empty split, infeasible simulation).
class TrainError : public std::runtime_error {
public:
  explicit TrainError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mtd

#endif  // MTD_ERRORS_HPP
