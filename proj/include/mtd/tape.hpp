#ifndef MTD_TAPE_HPP
#define MTD_TAPE_HPP

#include <cstddef>
#include <deque>
#include <functional>
#include <vector>

#include "mtd/matrix.hpp"

namespace mtd {

class Tape;

// Handle to a node on a Tape. Cheap to copy; the tape owns the storage.
struct Value {
  Tape* tape = nullptr;
  std::size_t index = static_cast<std::size_t>(-1);

  const Matrix& value() const;
  // Accumulated gradient; meaningful only after a backward pass.
  const Matrix& grad() const;

  bool valid() const { return tape != nullptr; }
};

// Records operations in execution order and replays their adjoint rules in
// reverse to compute gradients for every reachable leaf. One tape per
// training step; no global state, so independent tapes may run on
// independent threads.
class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // New tracked leaf (parameters, inputs, constants).
  Value leaf(Matrix m);

  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)/d(root) = 1 and replays adjoints in reverse order, adding
  // this pass's contribution into each node's persistent gradient. Calling
  // twice without zero_grad() therefore doubles every gradient.
  void backward(Value root);

  void zero_grad();

  const Matrix& value_of(std::size_t index) const { return nodes_[index].value; }
  const Matrix& grad_of(std::size_t index) const { return nodes_[index].grad; }

private:
  friend struct Value;
  friend class TapeOps;

  // Adjoint callbacks read this pass's adjoints and scatter into parents.
  using BackpropFn = std::function<void(Tape&, std::vector<Matrix>& adjoints)>;

  struct Node {
    Matrix value;
    Matrix grad;  // persistent accumulator, zero-initialized
    BackpropFn backprop;  // empty for leaves
  };

  Value push(Matrix value, BackpropFn fn, const char* op_name);
  static void accumulate(std::vector<Matrix>& adjoints, std::size_t index, const Matrix& delta);

  // deque keeps value()/grad() references stable while the tape grows
  std::deque<Node> nodes_;
};

// Differentiable operations. Operands must live on the same tape.
Value matmul(Value a, Value b);

// Element-wise arithmetic. `b` may share `a`'s shape or be a broadcastable
// 1xC row vector or 1x1 scalar.
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);

Value sigmoid(Value a);  // input clamped to [-500, 500] before exp
Value relu(Value a);

Value sum(Value a);       // 1x1
Value mean(Value a);      // 1x1
Value sum_rows(Value a);  // Nx1, per-row sums
Value sum_cols(Value a);  // 1xC, per-column sums

// Each row divided by max(||row||_2, 1e-12).
Value row_l2_normalize(Value a);

Value transpose(Value a);
Value scale(Value a, double k);
Value add_scalar(Value a, double k);
// ln(max(x, floor)); the floor keeps saturated probabilities finite.
Value log_clamped(Value a, double floor = 1e-12);
Value clamp_min(Value a, double lo);
Value concat_cols(Value a, Value b);

}  // namespace mtd

#endif  // MTD_TAPE_HPP
