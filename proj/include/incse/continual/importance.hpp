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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "incse/error.hpp"
#include "incse/grad/param.hpp"
#include "incse/grad/tape.hpp"
#include "incse/loss/sdr.hpp"
#include "incse/model/enhancer.hpp"

// Regularization for sequential adaptation. After each task the engine keeps
//
//   anchor    theta*  parameters at the end of the previous task
//   fisher    F~      interpolated diagonal of the empirical Fisher
//   path      S       accumulated path-integral importance
//
// and the next task trains on
//
//   L(theta) + lambda * sum_i ((1 - beta) F~_i + beta S_i) (theta_i - theta*_i)^2.
namespace incse::continual {

using grad::Matrix;
using grad::ParamVector;
using grad::Tape;
using grad::Var;

struct RegConfig {
  double lambda = 1.0;
  double alpha_interp = 0.5;
  double beta = 0.5;
  double epsilon = 1e-3;
};

inline void validate(const RegConfig& cfg) {
  INCSE_CHECK(cfg.lambda >= 0.0 && std::isfinite(cfg.lambda), ErrorCode::kInvalidArgument, "lambda must be >= 0");
  INCSE_CHECK(cfg.alpha_interp >= 0.0 && cfg.alpha_interp <= 1.0, ErrorCode::kInvalidArgument,
              "alpha_interp must lie in [0, 1]");
  INCSE_CHECK(cfg.beta >= 0.0 && cfg.beta <= 1.0, ErrorCode::kInvalidArgument, "beta must lie in [0, 1]");
  INCSE_CHECK(cfg.epsilon > 0.0, ErrorCode::kInvalidArgument, "epsilon must be > 0");
}

struct FisherDiag {
  ParamVector values;

  std::size_t size() const { return values.size(); }
};

// Running -sum_tau g_i(tau) * (theta_i(tau+1) - theta_i(tau)) over one task.
class PathAccumulator {
 public:
  PathAccumulator() = default;
  explicit PathAccumulator(const ParamVector& task_start) { reset(task_start); }

  void reset(const ParamVector& task_start) {
    theta_task_start_ = task_start;
    w_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(task_start.size()));
    steps_ = 0;
  }

  // Call once per optimizer step with the gradient that produced the step.
  void accumulate(const ParamVector& grad, const ParamVector& theta_before, const ParamVector& theta_after) {
    theta_task_start_.require_same_layout(grad, "accumulate_path(grad)");
    theta_task_start_.require_same_layout(theta_before, "accumulate_path(theta_before)");
    theta_task_start_.require_same_layout(theta_after, "accumulate_path(theta_after)");
    w_.array() -= grad.values().array() * (theta_after.values().array() - theta_before.values().array());
    ++steps_;
  }

  const Eigen::VectorXd& w() const { return w_; }
  const ParamVector& theta_task_start() const { return theta_task_start_; }
  std::size_t steps() const { return steps_; }

 private:
  Eigen::VectorXd w_;
  ParamVector theta_task_start_;
  std::size_t steps_ = 0;
};

struct ImportanceState {
  ParamVector anchor;
  FisherDiag fisher_tilde;
  Eigen::VectorXd path_scores;
  int task_index = 0;

  // Fresh state for a model about to learn its first task.
  static ImportanceState initial(const ParamVector& theta) {
    ImportanceState s;
    s.anchor = theta;
    s.fisher_tilde.values = ParamVector(theta.layout());
    s.path_scores = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(theta.size()));
    s.task_index = 0;
    return s;
  }

  void check_aligned() const {
    anchor.require_same_layout(fisher_tilde.values, "importance state");
    INCSE_CHECK(static_cast<std::size_t>(path_scores.size()) == anchor.size(), ErrorCode::kLayoutMismatch,
                "path scores have ", path_scores.size(), " entries, layout has ", anchor.size());
  }
};

// Per-parameter weight (1 - beta) F~ + beta S.
inline Eigen::VectorXd combined_importance(const ImportanceState& state, const RegConfig& cfg) {
  state.check_aligned();
  return (1.0 - cfg.beta) * state.fisher_tilde.values.values().array() + cfg.beta * state.path_scores.array();
}

// Mean over samples of the squared per-sample loss gradient at theta.
// `loss` is called as loss(tape, leaves, sample) and must return a scalar.
template <typename Sample, typename LossFn>
FisherDiag estimate_fisher_diag(const ParamVector& theta, std::span<const Sample> samples, LossFn&& loss) {
  INCSE_CHECK(!samples.empty(), ErrorCode::kEmptyDataset, "estimate_fisher_diag: empty dataset");
  FisherDiag f{ParamVector(theta.layout())};
  for (const Sample& s : samples) {
    Tape tape;
    const auto leaves = theta.bind(tape);
    const Var l = loss(tape, leaves, s);
    tape.backward(l);
    const ParamVector g = theta.gather_grad(leaves);
    f.values.values().array() += g.values().array().square();
  }
  f.values.values() /= static_cast<double>(samples.size());
  return f;
}

// Aligned (noisy, clean) magnitude pair.
struct MagnitudePair {
  Matrix noisy;
  Matrix clean;
};

inline FisherDiag estimate_fisher_diag(const model::Enhancer& m, std::span<const MagnitudePair> data) {
  return estimate_fisher_diag(m.params(), data,
                              [&m](Tape& tape, const std::vector<Var>& leaves, const MagnitudePair& p) {
                                return loss::loss_neg_sdr(m, tape, leaves, p.noisy, p.clean);
                              });
}

// alpha * new + (1 - alpha) * old, elementwise.
inline FisherDiag update_fisher(const FisherDiag& old_tilde, const FisherDiag& fresh, double alpha_interp) {
  old_tilde.values.require_same_layout(fresh.values, "update_fisher");
  INCSE_CHECK(alpha_interp >= 0.0 && alpha_interp <= 1.0, ErrorCode::kInvalidArgument,
              "alpha_interp must lie in [0, 1]");
  FisherDiag out{ParamVector(fresh.values.layout())};
  out.values.values() = alpha_interp * fresh.values.values().array() +
                        (1.0 - alpha_interp) * old_tilde.values.values().array();
  return out;
}

// max(0, w_i) / (dtheta_i^2 + epsilon) for one finished task.
inline Eigen::VectorXd path_contribution(const PathAccumulator& acc, const ParamVector& theta_end, double epsilon) {
  acc.theta_task_start().require_same_layout(theta_end, "path_contribution");
  const Eigen::ArrayXd delta = theta_end.values().array() - acc.theta_task_start().values().array();
  return acc.w().array().max(0.0) / (delta.square() + epsilon);
}

// Closes a task given the Fisher diagonal measured at its end: adds the path
// contribution, folds the Fisher into the running estimate, moves the anchor
// to theta_end, advances the task index and restarts the accumulator there.
// The first fold takes the fresh Fisher as-is since nothing precedes it.
inline ImportanceState finalize_task(const ImportanceState& state, PathAccumulator& acc, const ParamVector& theta_end,
                                     const FisherDiag& fresh_fisher, const RegConfig& cfg) {
  validate(cfg);
  state.check_aligned();
  INCSE_CHECK(acc.steps() > 0, ErrorCode::kEmptyPath, "empty path: finalize_task before any accumulate_path");
  state.anchor.require_same_layout(theta_end, "finalize_task");
  state.anchor.require_same_layout(fresh_fisher.values, "finalize_task(fisher)");

  ImportanceState next;
  next.path_scores = state.path_scores + path_contribution(acc, theta_end, cfg.epsilon);
  next.fisher_tilde =
      state.task_index == 0 ? fresh_fisher : update_fisher(state.fisher_tilde, fresh_fisher, cfg.alpha_interp);
  next.anchor = theta_end;
  next.task_index = state.task_index + 1;
  acc.reset(theta_end);
  return next;
}

inline ImportanceState finalize_task(const ImportanceState& state, PathAccumulator& acc, const model::Enhancer& m,
                                     std::span<const MagnitudePair> data, const RegConfig& cfg) {
  INCSE_CHECK(acc.steps() > 0, ErrorCode::kEmptyPath, "empty path: finalize_task before any accumulate_path");
  return finalize_task(state, acc, m.params(), estimate_fisher_diag(m, data), cfg);
}

// lambda * sum_i importance_i * (theta_i - anchor_i)^2 on the tape, from
// leaves bound in layout order.
inline Var penalty(Tape& tape, const std::vector<Var>& leaves, const ImportanceState& state, const RegConfig& cfg) {
  state.check_aligned();
  const auto& slots = state.anchor.layout().slots();
  INCSE_CHECK(leaves.size() == slots.size(), ErrorCode::kLayoutMismatch, "penalty: ", leaves.size(),
              " leaves for ", slots.size(), " parameters");
  const Eigen::VectorXd importance = combined_importance(state, cfg);
  Var total = tape.constant(Matrix::Zero(1, 1));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& s = slots[i];
    INCSE_CHECK(leaves[i].rows() == s.rows && leaves[i].cols() == s.cols, ErrorCode::kLayoutMismatch,
                "penalty: leaf ", s.name, " has wrong shape");
    const Var anchor = tape.constant(Matrix(state.anchor.block(i)));
    const Var weight = tape.constant(
        Eigen::Map<const Matrix>(importance.data() + static_cast<Eigen::Index>(s.offset), s.rows, s.cols));
    const Var diff = grad::sub(leaves[i], anchor);
    total = grad::add(total, grad::dot(grad::mul(diff, diff), weight));
  }
  return grad::scale(total, cfg.lambda);
}

// Plain double evaluation of the same sum.
inline double penalty_value(const ParamVector& theta, const ImportanceState& state, const RegConfig& cfg) {
  state.anchor.require_same_layout(theta, "penalty");
  const Eigen::VectorXd importance = combined_importance(state, cfg);
  const Eigen::ArrayXd diff = theta.values().array() - state.anchor.values().array();
  return cfg.lambda * (importance.array() * diff.square()).sum();
}

// Task loss plus the penalty. For the first task (or lambda = 0) this is the
// task loss alone.
inline Var regularized_loss(const model::Enhancer& m, Tape& tape, const std::vector<Var>& leaves,
                            const Matrix& noisy, const Matrix& clean, const ImportanceState& state,
                            const RegConfig& cfg) {
  const Var task = loss::loss_neg_sdr(m, tape, leaves, noisy, clean);
  if (state.task_index == 0 || cfg.lambda == 0.0) return task;
  return grad::add(task, penalty(tape, leaves, state, cfg));
}

}  // namespace incse::continual
