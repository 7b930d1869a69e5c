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
#include <string_view>

#include <Eigen/Dense>

#include "incse/error.hpp"
#include "incse/grad/param.hpp"

namespace incse::harness {

enum class OptimizerKind { kSgd, kAdam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::kSgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  ::incse::detail::fail(ErrorCode::kValidation, "unknown optimizer '", s, "'");
}

class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double lr) : kind_(kind), lr_(lr) {
    INCSE_CHECK(lr > 0.0, ErrorCode::kInvalidArgument, "learning rate must be > 0");
  }

  // theta <- theta - update(grad)
  void step(grad::ParamVector& theta, const grad::ParamVector& g) {
    theta.require_same_layout(g, "optimizer step");
    if (kind_ == OptimizerKind::kSgd) {
      theta.values() -= lr_ * g.values();
      return;
    }
    if (m_.size() == 0) {
      m_ = Eigen::VectorXd::Zero(g.values().size());
      v_ = Eigen::VectorXd::Zero(g.values().size());
    }
    ++t_;
    m_ = kBeta1 * m_ + (1.0 - kBeta1) * g.values();
    v_ = kBeta2 * v_ + (1.0 - kBeta2) * g.values().cwiseAbs2();
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    theta.values().array() -= lr_ * (m_.array() / c1) / ((v_.array() / c2).sqrt() + kEps);
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;

  OptimizerKind kind_;
  double lr_;
  Eigen::VectorXd m_;
  Eigen::VectorXd v_;
  long t_ = 0;
};

// Rescales g in place so that its L2 norm is at most max_norm; returns the
// norm before clipping. max_norm <= 0 disables clipping.
inline double clip_global_norm(grad::ParamVector& g, double max_norm) {
  const double norm = g.values().norm();
  if (max_norm > 0.0 && norm > max_norm) g.values() *= max_norm / norm;
  return norm;
}

}  // namespace incse::harness
