// Copyright 2026 The incse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "incse/error.hpp"

// Reverse-mode differentiation over dense rank-2 tensors. Row vectors are
// 1 x n, scalars 1 x 1. Every op records one node on the tape; backward()
// walks the nodes once in reverse recording order.
namespace incse::grad {

using Matrix = Eigen::MatrixXd;
using Tensor = Matrix;

class Tape;

class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  double scalar() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable leaf.
  Var variable(Matrix value) { return push(std::move(value), true, {}); }
  // Non-differentiable input.
  Var constant(Matrix value) { return push(std::move(value), false, {}); }

  // Records an op. `backprop` receives the output gradient and must
  // accumulate into the parents via accumulate().
  Var record(Matrix value, const std::vector<Var>& parents,
             std::function<void(Tape&, const Matrix&)> backprop) {
    bool needs = false;
    for (const Var& p : parents) {
      INCSE_CHECK(p.tape() == this, ErrorCode::kInvalidArgument, "operand recorded on a different tape");
      needs = needs || nodes_[p.id()].needs_grad;
    }
    INCSE_CHECK(value.allFinite(), ErrorCode::kInvalidArgument, "op produced non-finite values");
    return push(std::move(value), needs, needs ? std::move(backprop) : nullptr);
  }

  void accumulate(const Var& v, const Matrix& g) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  // Adds g into the (r0, c0) block of v's gradient.
  void accumulate_block(const Var& v, Eigen::Index r0, Eigen::Index c0, const Matrix& g) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    n.grad.block(r0, c0, g.rows(), g.cols()) += g;
  }

  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }

  void backward(const Var& output) {
    INCSE_CHECK(output.tape() == this, ErrorCode::kInvalidArgument, "output recorded on a different tape");
    INCSE_CHECK(output.rows() == 1 && output.cols() == 1, ErrorCode::kShapeMismatch,
                "backward requires a scalar output, got ", output.rows(), "x", output.cols());
    INCSE_CHECK(!backward_done_, ErrorCode::kInvalidArgument, "backward already ran on this tape");
    backward_done_ = true;
    nodes_[output.id()].grad = Matrix::Ones(1, 1);
    for (int i = output.id(); i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.backprop || n.grad.size() == 0) continue;
      n.backprop(*this, n.grad);
    }
  }

  const Matrix& value(int id) const { return nodes_[id].value; }

  // Gradient of a node after backward(); zeros if nothing flowed into it.
  const Matrix& grad(int id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::function<void(Tape&, const Matrix&)> backprop;
  };

  Var push(Matrix value, bool needs, std::function<void(Tape&, const Matrix&)> backprop) {
    nodes_.push_back(Node{std::move(value), Matrix(), needs, std::move(backprop)});
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline const Matrix& Var::grad() const { return tape_->grad(id_); }
inline double Var::scalar() const {
  INCSE_CHECK(rows() == 1 && cols() == 1, ErrorCode::kShapeMismatch, "not a scalar: ", rows(), "x", cols());
  return value()(0, 0);
}

namespace detail {

inline void same_shape(const Var& a, const Var& b, const char* op) {
  INCSE_CHECK(a.rows() == b.rows() && a.cols() == b.cols(), ErrorCode::kShapeMismatch, op, ": shape ", a.rows(),
              "x", a.cols(), " vs ", b.rows(), "x", b.cols());
}

inline void is_scalar(const Var& a, const char* op) {
  INCSE_CHECK(a.rows() == 1 && a.cols() == 1, ErrorCode::kShapeMismatch, op, ": expected scalar, got ", a.rows(),
              "x", a.cols());
}

}  // namespace detail

inline Var add(const Var& a, const Var& b) {
  detail::same_shape(a, b, "add");
  return a.tape()->record(a.value() + b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, g);
  });
}

inline Var sub(const Var& a, const Var& b) {
  detail::same_shape(a, b, "sub");
  return a.tape()->record(a.value() - b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    t.accumulate(b, -g);
  });
}

// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  detail::same_shape(a, b, "mul");
  return a.tape()->record(a.value().cwiseProduct(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseProduct(b.value()));
    if (t.needs_grad(b)) t.accumulate(b, g.cwiseProduct(a.value()));
  });
}

inline Var scale(const Var& a, double c) {
  return a.tape()->record(a.value() * c, {a}, [a, c](Tape& t, const Matrix& g) { t.accumulate(a, g * c); });
}

inline Var add_const(const Var& a, double c) {
  return a.tape()->record(a.value().array() + c, {a}, [a](Tape& t, const Matrix& g) { t.accumulate(a, g); });
}

// a (m x n) times scalar s (1 x 1).
inline Var scale_by(const Var& a, const Var& s) {
  detail::is_scalar(s, "scale_by");
  return a.tape()->record(a.value() * s.scalar(), {a, s}, [a, s](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * s.scalar());
    if (t.needs_grad(s)) t.accumulate(s, Matrix::Constant(1, 1, g.cwiseProduct(a.value()).sum()));
  });
}

// Adds a 1 x n row to every row of a (m x n).
inline Var add_row(const Var& a, const Var& row) {
  INCSE_CHECK(row.rows() == 1 && row.cols() == a.cols(), ErrorCode::kShapeMismatch, "add_row: row ", row.rows(),
              "x", row.cols(), " vs matrix with ", a.cols(), " cols");
  Matrix out = a.value().rowwise() + row.value().row(0);
  return a.tape()->record(std::move(out), {a, row}, [a, row](Tape& t, const Matrix& g) {
    t.accumulate(a, g);
    if (t.needs_grad(row)) t.accumulate(row, g.colwise().sum());
  });
}

// a (m x k) * b (k x n).
inline Var matmul(const Var& a, const Var& b) {
  INCSE_CHECK(a.cols() == b.rows(), ErrorCode::kShapeMismatch, "matmul: ", a.rows(), "x", a.cols(), " * ",
              b.rows(), "x", b.cols());
  return a.tape()->record(a.value() * b.value(), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * b.value().transpose());
    if (t.needs_grad(b)) t.accumulate(b, a.value().transpose() * g);
  });
}

// a (m x k) * w^T where w is (n x k): applies a weight matrix to row vectors.
inline Var matmul_nt(const Var& a, const Var& w) {
  INCSE_CHECK(a.cols() == w.cols(), ErrorCode::kShapeMismatch, "matmul_nt: ", a.rows(), "x", a.cols(), " * (",
              w.rows(), "x", w.cols(), ")^T");
  return a.tape()->record(a.value() * w.value().transpose(), {a, w}, [a, w](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g * w.value());
    if (t.needs_grad(w)) t.accumulate(w, g.transpose() * a.value());
  });
}

// W (m x n) applied to a column vector v (n x 1).
inline Var matvec(const Var& w, const Var& v) {
  INCSE_CHECK(v.cols() == 1 && w.cols() == v.rows(), ErrorCode::kShapeMismatch, "matvec: ", w.rows(), "x",
              w.cols(), " * ", v.rows(), "x", v.cols());
  return matmul(w, v);
}

inline Var sigmoid(const Var& a) {
  Matrix y = a.value().unaryExpr([](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  });
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((y.array() * (1.0 - y.array())).matrix()));
  });
}

inline Var tanh(const Var& a) {
  Matrix y = a.value().array().tanh().matrix();
  return a.tape()->record(y, {a}, [a, y](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

// log(1 + exp(x)), overflow-safe.
inline Var softplus(const Var& a) {
  Matrix y = a.value().unaryExpr([](double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); });
  return a.tape()->record(std::move(y), {a}, [a](Tape& t, const Matrix& g) {
    Matrix s = a.value().unaryExpr([](double x) {
      if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
      const double e = std::exp(x);
      return e / (1.0 + e);
    });
    t.accumulate(a, g.cwiseProduct(s));
  });
}

inline Var log(const Var& a) {
  INCSE_CHECK((a.value().array() > 0.0).all(), ErrorCode::kInvalidArgument, "log of non-positive value");
  return a.tape()->record(a.value().array().log().matrix(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseQuotient(a.value()));
  });
}

inline Var abs(const Var& a) {
  return a.tape()->record(a.value().cwiseAbs(), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, g.cwiseProduct(a.value().unaryExpr([](double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); })));
  });
}

// Elementwise a / b.
inline Var div(const Var& a, const Var& b) {
  detail::same_shape(a, b, "div");
  return a.tape()->record(a.value().cwiseQuotient(b.value()), {a, b}, [a, b](Tape& t, const Matrix& g) {
    if (t.needs_grad(a)) t.accumulate(a, g.cwiseQuotient(b.value()));
    if (t.needs_grad(b)) {
      const Matrix q = a.value().cwiseQuotient(b.value().cwiseProduct(b.value()));
      t.accumulate(b, -g.cwiseProduct(q));
    }
  });
}

// Clamp to [lo, hi]; the gradient is zero wherever the bound is active.
inline Var clamp(const Var& a, double lo, double hi) {
  Matrix y = a.value().cwiseMax(lo).cwiseMin(hi);
  return a.tape()->record(std::move(y), {a}, [a, lo, hi](Tape& t, const Matrix& g) {
    const Matrix& x = a.value();
    Matrix mask = ((x.array() > lo) && (x.array() < hi)).cast<double>().matrix();
    t.accumulate(a, g.cwiseProduct(mask));
  });
}

inline Var sum(const Var& a) {
  return a.tape()->record(Matrix::Constant(1, 1, a.value().sum()), {a}, [a](Tape& t, const Matrix& g) {
    t.accumulate(a, Matrix::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

// Frobenius inner product.
inline Var dot(const Var& a, const Var& b) {
  detail::same_shape(a, b, "dot");
  return a.tape()->record(Matrix::Constant(1, 1, a.value().cwiseProduct(b.value()).sum()), {a, b},
                          [a, b](Tape& t, const Matrix& g) {
                            if (t.needs_grad(a)) t.accumulate(a, b.value() * g(0, 0));
                            if (t.needs_grad(b)) t.accumulate(b, a.value() * g(0, 0));
                          });
}

inline Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  INCSE_CHECK(start >= 0 && count >= 0 && start + count <= a.rows(), ErrorCode::kShapeMismatch,
              "slice_rows [", start, ", ", start + count, ") of ", a.rows(), " rows");
  return a.tape()->record(a.value().middleRows(start, count), {a},
                          [a, start](Tape& t, const Matrix& g) { t.accumulate_block(a, start, 0, g); });
}

inline Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  INCSE_CHECK(start >= 0 && count >= 0 && start + count <= a.cols(), ErrorCode::kShapeMismatch,
              "slice_cols [", start, ", ", start + count, ") of ", a.cols(), " cols");
  return a.tape()->record(a.value().middleCols(start, count), {a},
                          [a, start](Tape& t, const Matrix& g) { t.accumulate_block(a, 0, start, g); });
}

// Stacks row blocks vertically.
inline Var concat_rows(const std::vector<Var>& parts) {
  INCSE_CHECK(!parts.empty(), ErrorCode::kInvalidArgument, "concat_rows of nothing");
  Tape* tape = parts.front().tape();
  Eigen::Index rows = 0;
  const Eigen::Index cols = parts.front().cols();
  for (const Var& p : parts) {
    INCSE_CHECK(p.cols() == cols && p.tape() == tape, ErrorCode::kShapeMismatch, "concat_rows: column mismatch");
    rows += p.rows();
  }
  Matrix out(rows, cols);
  Eigen::Index r = 0;
  for (const Var& p : parts) {
    out.middleRows(r, p.rows()) = p.value();
    r += p.rows();
  }
  auto backprop = [parts](Tape& t, const Matrix& g) {
    Eigen::Index at = 0;
    for (const Var& p : parts) {
      t.accumulate(p, g.middleRows(at, p.rows()));
      at += p.rows();
    }
  };
  return tape->record(std::move(out), parts, backprop);
}

inline Var concat_cols(const std::vector<Var>& parts) {
  INCSE_CHECK(!parts.empty(), ErrorCode::kInvalidArgument, "concat_cols of nothing");
  Tape* tape = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const Var& p : parts) {
    INCSE_CHECK(p.rows() == rows && p.tape() == tape, ErrorCode::kShapeMismatch, "concat_cols: row mismatch");
    cols += p.cols();
  }
  Matrix out(rows, cols);
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    out.middleCols(c, p.cols()) = p.value();
    c += p.cols();
  }
  auto backprop = [parts](Tape& t, const Matrix& g) {
    Eigen::Index at = 0;
    for (const Var& p : parts) {
      t.accumulate(p, g.middleCols(at, p.cols()));
      at += p.cols();
    }
  };
  return tape->record(std::move(out), parts, backprop);
}

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, double c) { return scale(a, c); }
inline Var operator*(double c, const Var& a) { return scale(a, c); }

}  // namespace incse::grad
