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

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "incse/error.hpp"
#include "incse/grad/tape.hpp"

namespace incse::grad {

struct ParamSlot {
  std::string name;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  std::size_t offset = 0;

  std::size_t size() const { return static_cast<std::size_t>(rows * cols); }
  bool operator==(const ParamSlot&) const = default;
};

class Layout {
 public:
  Layout() = default;

  std::size_t add(std::string name, Eigen::Index rows, Eigen::Index cols) {
    INCSE_CHECK(rows > 0 && cols > 0, ErrorCode::kInvalidArgument, "parameter ", name, " has empty shape");
    for (const auto& s : slots_)
      INCSE_CHECK(s.name != name, ErrorCode::kInvalidArgument, "duplicate parameter name ", name);
    slots_.push_back(ParamSlot{std::move(name), rows, cols, total_});
    total_ += slots_.back().size();
    return slots_.size() - 1;
  }

  const std::vector<ParamSlot>& slots() const { return slots_; }
  std::size_t total() const { return total_; }

  const ParamSlot& slot(const std::string& name) const {
    for (const auto& s : slots_)
      if (s.name == name) return s;
    ::incse::detail::fail(ErrorCode::kInvalidArgument, "no parameter named ", name);
  }

  bool operator==(const Layout&) const = default;

 private:
  std::vector<ParamSlot> slots_;
  std::size_t total_ = 0;
};

// Flat parameter storage with a stable (name, shape, offset) index. Each
// block is stored column-major, matching Eigen's default.
class ParamVector {
 public:
  using Block = Eigen::Map<Eigen::MatrixXd>;
  using ConstBlock = Eigen::Map<const Eigen::MatrixXd>;

  ParamVector() = default;
  explicit ParamVector(Layout layout) : layout_(std::move(layout)), values_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout_.total()))) {}
  ParamVector(Layout layout, Eigen::VectorXd values) : layout_(std::move(layout)), values_(std::move(values)) {
    INCSE_CHECK(static_cast<std::size_t>(values_.size()) == layout_.total(), ErrorCode::kLayoutMismatch,
                "value count ", values_.size(), " != layout total ", layout_.total());
  }

  const Layout& layout() const { return layout_; }
  std::size_t size() const { return layout_.total(); }

  Eigen::VectorXd& values() { return values_; }
  const Eigen::VectorXd& values() const { return values_; }
  double& operator[](std::size_t i) { return values_[static_cast<Eigen::Index>(i)]; }
  double operator[](std::size_t i) const { return values_[static_cast<Eigen::Index>(i)]; }

  Block block(std::size_t slot_index) {
    const auto& s = layout_.slots()[slot_index];
    return Block(values_.data() + s.offset, s.rows, s.cols);
  }
  ConstBlock block(std::size_t slot_index) const {
    const auto& s = layout_.slots()[slot_index];
    return ConstBlock(values_.data() + s.offset, s.rows, s.cols);
  }
  Block block(const std::string& name) { return block(index_of(name)); }
  ConstBlock block(const std::string& name) const { return block(index_of(name)); }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t i = 0; i < layout_.slots().size(); ++i)
      if (layout_.slots()[i].name == name) return i;
    ::incse::detail::fail(ErrorCode::kInvalidArgument, "no parameter named ", name);
  }

  bool same_layout(const ParamVector& other) const { return layout_ == other.layout_; }

  void require_same_layout(const ParamVector& other, const char* what) const {
    INCSE_CHECK(same_layout(other), ErrorCode::kLayoutMismatch, what, ": parameter layout mismatch (", size(),
                " vs ", other.size(), " entries)");
  }

  // Records every block as a differentiable leaf, in layout order.
  std::vector<Var> bind(Tape& tape) const {
    std::vector<Var> vars;
    vars.reserve(layout_.slots().size());
    for (std::size_t i = 0; i < layout_.slots().size(); ++i) vars.push_back(tape.variable(Matrix(block(i))));
    return vars;
  }

  // Records every block as a constant (inference only).
  std::vector<Var> bind_constant(Tape& tape) const {
    std::vector<Var> vars;
    vars.reserve(layout_.slots().size());
    for (std::size_t i = 0; i < layout_.slots().size(); ++i) vars.push_back(tape.constant(Matrix(block(i))));
    return vars;
  }

  // Collects gradients of bound leaves into a vector with this layout.
  ParamVector gather_grad(const std::vector<Var>& bound) const {
    INCSE_CHECK(bound.size() == layout_.slots().size(), ErrorCode::kLayoutMismatch, "bound ", bound.size(),
                " leaves for ", layout_.slots().size(), " parameters");
    ParamVector g(layout_);
    for (std::size_t i = 0; i < bound.size(); ++i) g.block(i) = bound[i].grad();
    return g;
  }

 private:
  Layout layout_;
  Eigen::VectorXd values_;
};

}  // namespace incse::grad
