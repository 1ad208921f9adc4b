#include "mtd/tape.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mtd/errors.hpp"

namespace mtd {

namespace {

double stable_sigmoid(double x) {
  if (x > 500.0) x = 500.0;
  if (x < -500.0) x = -500.0;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tape& common_tape(Value a, Value b, const char* op) {
  if (!a.valid() || !b.valid()) throw ContractError(std::string(op) + ": invalid value handle");
  if (a.tape != b.tape) throw ContractError(std::string(op) + ": operands on different tapes");
  return *a.tape;
}

Tape& own_tape(Value a, const char* op) {
  if (!a.valid()) throw ContractError(std::string(op) + ": invalid value handle");
  return *a.tape;
}

enum class Broadcast { None, Row, Scalar };

Broadcast broadcast_kind(const Matrix& a, const Matrix& b, const char* op) {
  if (a.same_shape(b)) return Broadcast::None;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::Scalar;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::Row;
  throw ShapeError(std::string(op) + ": " + a.shape_str() + " vs " + b.shape_str());
}

double broadcast_at(const Matrix& b, Broadcast kind, std::size_t i, std::size_t j) {
  switch (kind) {
    case Broadcast::None: return b(i, j);
    case Broadcast::Row: return b(0, j);
    default: return b(0, 0);
  }
}

// Folds a full-shaped adjoint down to the broadcast operand's shape.
Matrix reduce_to(const Matrix& g, Broadcast kind, std::size_t cols) {
  if (kind == Broadcast::Scalar) {
    double s = 0.0;
    for (double v : g.data()) s += v;
    return Matrix::full(1, 1, s);
  }
  Matrix r(1, cols);
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j < cols; ++j) r(0, j) += g(i, j);
  return r;
}

}  // namespace

const Matrix& Value::value() const { return tape->value_of(index); }
const Matrix& Value::grad() const { return tape->grad_of(index); }

Value Tape::leaf(Matrix m) { return push(std::move(m), BackpropFn{}, "leaf"); }

Value Tape::push(Matrix value, BackpropFn fn, const char* op_name) {
  value.ensure_finite(op_name);
  Node node;
  node.grad = Matrix(value.rows(), value.cols());
  node.value = std::move(value);
  node.backprop = std::move(fn);
  nodes_.push_back(std::move(node));
  return Value{this, nodes_.size() - 1};
}

void Tape::accumulate(std::vector<Matrix>& adjoints, std::size_t index, const Matrix& delta) {
  Matrix& slot = adjoints[index];
  if (slot.empty()) {
    slot = delta;
    return;
  }
  for (std::size_t i = 0; i < slot.size(); ++i) slot.data()[i] += delta.data()[i];
}

void Tape::backward(Value root) {
  if (root.tape != this) throw ContractError("backward: root lives on another tape");
  const Matrix& rv = nodes_[root.index].value;
  if (rv.rows() != 1 || rv.cols() != 1) {
    throw ContractError("backward: root must be a 1x1 scalar, got " + rv.shape_str());
  }
  // Fresh adjoint buffers per pass; persistent grads accumulate at the end.
  std::vector<Matrix> adjoints(root.index + 1);
  adjoints[root.index] = Matrix::full(1, 1, 1.0);
  for (std::size_t i = root.index + 1; i-- > 0;) {
    if (adjoints[i].empty()) continue;
    if (nodes_[i].backprop) nodes_[i].backprop(*this, adjoints);
  }
  for (std::size_t i = 0; i <= root.index; ++i) {
    if (adjoints[i].empty()) continue;
    Matrix& g = nodes_[i].grad;
    for (std::size_t k = 0; k < g.size(); ++k) g.data()[k] += adjoints[i].data()[k];
  }
}

void Tape::zero_grad() {
  for (Node& node : nodes_) node.grad.fill(0.0);
}

// Exposes Tape internals to the free-function operations in this file.
class TapeOps {
public:
  static Value push(Tape& t, Matrix value, Tape::BackpropFn fn, const char* op) {
    return t.push(std::move(value), std::move(fn), op);
  }
  static std::size_t next_index(const Tape& t) { return t.nodes_.size(); }
  static void accumulate(std::vector<Matrix>& adj, std::size_t index, const Matrix& delta) {
    Tape::accumulate(adj, index, delta);
  }
};

namespace {

void acc(std::vector<Matrix>& adj, std::size_t index, const Matrix& delta) {
  TapeOps::accumulate(adj, index, delta);
}

}  // namespace

Value matmul(Value a, Value b) {
  Tape& t = common_tape(a, b, "matmul");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: inner dimensions disagree, " + av.shape_str() + " x " +
                     bv.shape_str());
  }
  const std::size_t ia = a.index, ib = b.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, mtd::matmul(av, bv),
      [ia, ib, io](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        acc(adj, ia, mtd::matmul(g, tape.value_of(ib).transposed()));
        acc(adj, ib, mtd::matmul(tape.value_of(ia).transposed(), g));
      },
      "matmul");
}

namespace {

enum class EwKind { Add, Sub, Mul, Div };

Value elementwise(Value a, Value b, EwKind kind, const char* name) {
  Tape& t = common_tape(a, b, name);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const Broadcast bc = broadcast_kind(av, bv, name);
  if (kind == EwKind::Div) {
    for (double v : bv.data()) {
      if (v == 0.0) throw NumericError(std::string(name) + ": division by zero");
    }
  }
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < av.cols(); ++j) {
      const double x = av(i, j), y = broadcast_at(bv, bc, i, j);
      switch (kind) {
        case EwKind::Add: out(i, j) = x + y; break;
        case EwKind::Sub: out(i, j) = x - y; break;
        case EwKind::Mul: out(i, j) = x * y; break;
        case EwKind::Div: out(i, j) = x / y; break;
      }
    }
  }
  const std::size_t ia = a.index, ib = b.index, io = TapeOps::next_index(t);
  const std::size_t bcols = bv.cols();
  return TapeOps::push(
      t, std::move(out),
      [ia, ib, io, kind, bc, bcols](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& av2 = tape.value_of(ia);
        const Matrix& bv2 = tape.value_of(ib);
        Matrix da(g.rows(), g.cols());
        Matrix db_full(g.rows(), g.cols());
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < g.cols(); ++j) {
            const double gij = g(i, j);
            const double x = av2(i, j), y = broadcast_at(bv2, bc, i, j);
            switch (kind) {
              case EwKind::Add:
                da(i, j) = gij;
                db_full(i, j) = gij;
                break;
              case EwKind::Sub:
                da(i, j) = gij;
                db_full(i, j) = -gij;
                break;
              case EwKind::Mul:
                da(i, j) = gij * y;
                db_full(i, j) = gij * x;
                break;
              case EwKind::Div:
                da(i, j) = gij / y;
                db_full(i, j) = -gij * x / (y * y);
                break;
            }
          }
        }
        acc(adj, ia, da);
        acc(adj, ib, bc == Broadcast::None ? db_full : reduce_to(db_full, bc, bcols));
      },
      name);
}

}  // namespace

Value add(Value a, Value b) { return elementwise(a, b, EwKind::Add, "add"); }
Value sub(Value a, Value b) { return elementwise(a, b, EwKind::Sub, "sub"); }
Value mul(Value a, Value b) { return elementwise(a, b, EwKind::Mul, "mul"); }
Value div(Value a, Value b) { return elementwise(a, b, EwKind::Div, "div"); }

Value sigmoid(Value a) {
  Tape& t = own_tape(a, "sigmoid");
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out.data()[i] = stable_sigmoid(av.data()[i]);
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& y = tape.value_of(io);
        Matrix da(g.rows(), g.cols());
        for (std::size_t k = 0; k < g.size(); ++k) {
          const double s = y.data()[k];
          da.data()[k] = g.data()[k] * s * (1.0 - s);
        }
        acc(adj, ia, da);
      },
      "sigmoid");
}

Value relu(Value a) {
  Tape& t = own_tape(a, "relu");
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out.data()[i] = std::max(av.data()[i], 0.0);
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& x = tape.value_of(ia);
        Matrix da(g.rows(), g.cols());
        for (std::size_t k = 0; k < g.size(); ++k)
          da.data()[k] = x.data()[k] > 0.0 ? g.data()[k] : 0.0;
        acc(adj, ia, da);
      },
      "relu");
}

Value sum(Value a) {
  Tape& t = own_tape(a, "sum");
  const Matrix& av = a.value();
  double s = 0.0;
  for (double v : av.data()) s += v;
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, Matrix::full(1, 1, s),
      [ia, io](Tape& tape, std::vector<Matrix>& adj) {
        const double g = adj[io](0, 0);
        const Matrix& x = tape.value_of(ia);
        acc(adj, ia, Matrix::full(x.rows(), x.cols(), g));
      },
      "sum");
}

Value mean(Value a) {
  Tape& t = own_tape(a, "mean");
  const Matrix& av = a.value();
  if (av.empty()) throw ContractError("mean: empty matrix");
  double s = 0.0;
  for (double v : av.data()) s += v;
  const double inv = 1.0 / static_cast<double>(av.size());
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, Matrix::full(1, 1, s * inv),
      [ia, io, inv](Tape& tape, std::vector<Matrix>& adj) {
        const double g = adj[io](0, 0);
        const Matrix& x = tape.value_of(ia);
        acc(adj, ia, Matrix::full(x.rows(), x.cols(), g * inv));
      },
      "mean");
}

Value sum_rows(Value a) {
  Tape& t = own_tape(a, "sum_rows");
  const Matrix& av = a.value();
  Matrix out(av.rows(), 1);
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) s += av(i, j);
    out(i, 0) = s;
  }
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& x = tape.value_of(ia);
        Matrix da(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) da(i, j) = g(i, 0);
        acc(adj, ia, da);
      },
      "sum_rows");
}

Value sum_cols(Value a) {
  Tape& t = own_tape(a, "sum_cols");
  const Matrix& av = a.value();
  Matrix out(1, av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i)
    for (std::size_t j = 0; j < av.cols(); ++j) out(0, j) += av(i, j);
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& x = tape.value_of(ia);
        Matrix da(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
          for (std::size_t j = 0; j < x.cols(); ++j) da(i, j) = g(0, j);
        acc(adj, ia, da);
      },
      "sum_cols");
}

Value row_l2_normalize(Value a) {
  constexpr double kEps = 1e-12;
  Tape& t = own_tape(a, "row_l2_normalize");
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    double sq = 0.0;
    for (std::size_t j = 0; j < av.cols(); ++j) sq += av(i, j) * av(i, j);
    const double r = std::max(std::sqrt(sq), kEps);
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j) / r;
  }
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& x = tape.value_of(ia);
        Matrix da(x.rows(), x.cols());
        for (std::size_t i = 0; i < x.rows(); ++i) {
          double sq = 0.0, xg = 0.0;
          for (std::size_t j = 0; j < x.cols(); ++j) {
            sq += x(i, j) * x(i, j);
            xg += x(i, j) * g(i, j);
          }
          const double norm = std::sqrt(sq);
          if (norm > kEps) {
            const double inv = 1.0 / norm;
            const double inv3 = inv * inv * inv;
            for (std::size_t j = 0; j < x.cols(); ++j)
              da(i, j) = g(i, j) * inv - x(i, j) * xg * inv3;
          } else {
            // guarded branch: y = x / eps
            for (std::size_t j = 0; j < x.cols(); ++j) da(i, j) = g(i, j) / kEps;
          }
        }
        acc(adj, ia, da);
      },
      "row_l2_normalize");
}

Value transpose(Value a) {
  Tape& t = own_tape(a, "transpose");
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, a.value().transposed(),
      [ia, io](Tape&, std::vector<Matrix>& adj) { acc(adj, ia, adj[io].transposed()); },
      "transpose");
}

Value scale(Value a, double k) {
  Tape& t = own_tape(a, "scale");
  Matrix out = a.value();
  for (double& v : out.data()) v *= k;
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io, k](Tape&, std::vector<Matrix>& adj) {
        Matrix da = adj[io];
        for (double& v : da.data()) v *= k;
        acc(adj, ia, da);
      },
      "scale");
}

Value add_scalar(Value a, double k) {
  Tape& t = own_tape(a, "add_scalar");
  Matrix out = a.value();
  for (double& v : out.data()) v += k;
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io](Tape&, std::vector<Matrix>& adj) { acc(adj, ia, adj[io]); },
      "add_scalar");
}

Value log_clamped(Value a, double floor) {
  Tape& t = own_tape(a, "log");
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i)
    out.data()[i] = std::log(std::max(av.data()[i], floor));
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io, floor](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& x = tape.value_of(ia);
        Matrix da(x.rows(), x.cols());
        for (std::size_t k = 0; k < x.size(); ++k)
          da.data()[k] = x.data()[k] >= floor ? g.data()[k] / x.data()[k] : 0.0;
        acc(adj, ia, da);
      },
      "log");
}

Value clamp_min(Value a, double lo) {
  Tape& t = own_tape(a, "clamp_min");
  const Matrix& av = a.value();
  Matrix out(av.rows(), av.cols());
  for (std::size_t i = 0; i < av.size(); ++i) out.data()[i] = std::max(av.data()[i], lo);
  const std::size_t ia = a.index, io = TapeOps::next_index(t);
  return TapeOps::push(
      t, std::move(out),
      [ia, io, lo](Tape& tape, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        const Matrix& x = tape.value_of(ia);
        Matrix da(x.rows(), x.cols());
        for (std::size_t k = 0; k < x.size(); ++k)
          da.data()[k] = x.data()[k] > lo ? g.data()[k] : 0.0;
        acc(adj, ia, da);
      },
      "clamp_min");
}

Value concat_cols(Value a, Value b) {
  Tape& t = common_tape(a, b, "concat_cols");
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.rows() != bv.rows()) {
    throw ShapeError("concat_cols: row counts disagree, " + av.shape_str() + " vs " +
                     bv.shape_str());
  }
  Matrix out(av.rows(), av.cols() + bv.cols());
  for (std::size_t i = 0; i < av.rows(); ++i) {
    for (std::size_t j = 0; j < av.cols(); ++j) out(i, j) = av(i, j);
    for (std::size_t j = 0; j < bv.cols(); ++j) out(i, av.cols() + j) = bv(i, j);
  }
  const std::size_t ia = a.index, ib = b.index, io = TapeOps::next_index(t);
  const std::size_t acols = av.cols(), bcols = bv.cols();
  return TapeOps::push(
      t, std::move(out),
      [ia, ib, io, acols, bcols](Tape&, std::vector<Matrix>& adj) {
        const Matrix& g = adj[io];
        Matrix da(g.rows(), acols);
        Matrix db(g.rows(), bcols);
        for (std::size_t i = 0; i < g.rows(); ++i) {
          for (std::size_t j = 0; j < acols; ++j) da(i, j) = g(i, j);
          for (std::size_t j = 0; j < bcols; ++j) db(i, j) = g(i, acols + j);
        }
        acc(adj, ia, da);
        acc(adj, ib, db);
      },
      "concat_cols");
}

}  // namespace mtd
