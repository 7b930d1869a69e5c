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
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "incse/error.hpp"
#include "incse/grad/param.hpp"
#include "incse/grad/tape.hpp"

namespace incse::model {

using grad::Matrix;
using grad::ParamVector;
using grad::Tape;
using grad::Var;

struct EnhancerConfig {
  int num_lstm_layers = 2;
  int hidden_dim = 64;
  int feature_dim = 257;
  std::uint64_t seed = 0;

  static EnhancerConfig desk() { return {}; }
  static EnhancerConfig large() { return {3, 257, 257, 0}; }

  bool operator==(const EnhancerConfig&) const = default;
};

inline void validate(const EnhancerConfig& cfg) {
  INCSE_CHECK(cfg.num_lstm_layers >= 1, ErrorCode::kInvalidArgument, "num_lstm_layers must be >= 1");
  INCSE_CHECK(cfg.hidden_dim > 0, ErrorCode::kInvalidArgument, "hidden_dim must be > 0");
  INCSE_CHECK(cfg.feature_dim > 0, ErrorCode::kInvalidArgument, "feature_dim must be > 0");
}

// Parameter layout: per LSTM layer l, "lstm<l>.w_ih" (4H x in),
// "lstm<l>.w_hh" (4H x H), "lstm<l>.bias" (1 x 4H) with gate blocks ordered
// input, forget, cell, output; then "out.weight" (F x H), "out.bias" (1 x F).
inline grad::Layout make_layout(const EnhancerConfig& cfg) {
  grad::Layout layout;
  const int h = cfg.hidden_dim;
  for (int l = 0; l < cfg.num_lstm_layers; ++l) {
    const int in = l == 0 ? cfg.feature_dim : h;
    const std::string p = "lstm" + std::to_string(l);
    layout.add(p + ".w_ih", 4 * h, in);
    layout.add(p + ".w_hh", 4 * h, h);
    layout.add(p + ".bias", 1, 4 * h);
  }
  layout.add("out.weight", cfg.feature_dim, h);
  layout.add("out.bias", 1, cfg.feature_dim);
  return layout;
}

// Unidirectional stacked LSTM followed by an affine layer and softplus,
// mapping noisy magnitude frames (T x F) to enhanced magnitude frames.
// Inputs are divided by their utterance mean and outputs multiplied back.
class Enhancer {
 public:
  Enhancer() : Enhancer(EnhancerConfig{}) {}

  explicit Enhancer(const EnhancerConfig& cfg) : cfg_(cfg) {
    validate(cfg_);
    params_ = ParamVector(make_layout(cfg_));
    std::mt19937_64 rng(cfg_.seed);
    const int h = cfg_.hidden_dim;
    for (std::size_t i = 0; i < params_.layout().slots().size(); ++i) {
      const auto& slot = params_.layout().slots()[i];
      auto block = params_.block(i);
      if (slot.rows == 1) {
        block.setZero();
        // forget gate
        if (slot.name.starts_with("lstm")) block.middleCols(h, h).setConstant(1.0);
        continue;
      }
      const double bound = 1.0 / std::sqrt(static_cast<double>(slot.cols));
      std::uniform_real_distribution<double> dist(-bound, bound);
      for (Eigen::Index c = 0; c < block.cols(); ++c)
        for (Eigen::Index r = 0; r < block.rows(); ++r) block(r, c) = dist(rng);
    }
  }

  const EnhancerConfig& config() const { return cfg_; }
  ParamVector& params() { return params_; }
  const ParamVector& params() const { return params_; }

  ParamVector snapshot() const { return params_; }

  void restore(const ParamVector& p) {
    params_.require_same_layout(p, "restore");
    params_ = p;
  }

  // Records the forward pass on `tape` using bound parameter leaves (from
  // params().bind or bind_constant).
  Var forward(Tape& tape, const std::vector<Var>& leaves, const Matrix& noisy) const {
    return forward(tape, leaves, noisy, normalizer(noisy));
  }

  // Same with an explicit input scale. The network itself is causal: output
  // row t depends on input rows 0..t and `norm` only.
  Var forward(Tape& tape, const std::vector<Var>& leaves, const Matrix& noisy, double norm) const {
    INCSE_CHECK(norm > 0.0 && std::isfinite(norm), ErrorCode::kInvalidArgument, "normalizer must be positive");
    INCSE_CHECK(noisy.cols() == cfg_.feature_dim, ErrorCode::kShapeMismatch, "input has ", noisy.cols(),
                " bins, model expects ", cfg_.feature_dim);
    INCSE_CHECK(noisy.rows() >= 1, ErrorCode::kShapeMismatch, "input has no frames");
    INCSE_CHECK(leaves.size() == params_.layout().slots().size(), ErrorCode::kLayoutMismatch,
                "expected ", params_.layout().slots().size(), " parameter leaves, got ", leaves.size());
    const int h = cfg_.hidden_dim;
    const Eigen::Index frames = noisy.rows();

    Var x = tape.constant(noisy / norm);
    for (int l = 0; l < cfg_.num_lstm_layers; ++l) {
      const Var& w_ih = leaves[3 * l];
      const Var& w_hh = leaves[3 * l + 1];
      const Var& bias = leaves[3 * l + 2];
      // Input projections for all frames at once.
      const Var proj = grad::add_row(grad::matmul_nt(x, w_ih), bias);
      Var hidden = tape.constant(Matrix::Zero(1, h));
      Var cell = tape.constant(Matrix::Zero(1, h));
      std::vector<Var> outputs;
      outputs.reserve(static_cast<std::size_t>(frames));
      for (Eigen::Index t = 0; t < frames; ++t) {
        const Var z = grad::add(grad::slice_rows(proj, t, 1), grad::matmul_nt(hidden, w_hh));
        const Var in_gate = grad::sigmoid(grad::slice_cols(z, 0, h));
        const Var forget_gate = grad::sigmoid(grad::slice_cols(z, h, h));
        const Var candidate = grad::tanh(grad::slice_cols(z, 2 * h, h));
        const Var out_gate = grad::sigmoid(grad::slice_cols(z, 3 * h, h));
        cell = grad::add(grad::mul(forget_gate, cell), grad::mul(in_gate, candidate));
        hidden = grad::mul(out_gate, grad::tanh(cell));
        outputs.push_back(hidden);
      }
      x = grad::concat_rows(outputs);
    }
    const std::size_t out_w = leaves.size() - 2;
    const Var logits = grad::add_row(grad::matmul_nt(x, leaves[out_w]), leaves[out_w + 1]);
    return grad::scale(grad::softplus(logits), norm);
  }

  // Inference without gradient bookkeeping.
  Matrix enhance(const Matrix& noisy) const { return enhance(noisy, normalizer(noisy)); }

  Matrix enhance(const Matrix& noisy, double norm) const {
    Tape tape;
    const auto leaves = params_.bind_constant(tape);
    return forward(tape, leaves, noisy, norm).value();
  }

  static double normalizer(const Matrix& noisy) {
    const double mean = noisy.size() > 0 ? noisy.mean() : 0.0;
    return mean > 1e-8 ? mean : 1.0;
  }

 private:
  EnhancerConfig cfg_;
  ParamVector params_;
};

}  // namespace incse::model
