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
#include <concepts>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "incse/grad/param.hpp"
#include "incse/grad/tape.hpp"

namespace incse::grad {

// A differentiable objective: records a scalar on `tape` from the bound
// parameter leaves.
template <typename F>
concept Objective = requires(F f, Tape& tape, const std::vector<Var>& params) {
  { f(tape, params) } -> std::convertible_to<Var>;
};

struct ValueAndGrad {
  double value = 0.0;
  ParamVector grad;
};

template <Objective F>
ValueAndGrad value_and_grad(const ParamVector& theta, F&& objective) {
  Tape tape;
  const auto leaves = theta.bind(tape);
  const Var out = objective(tape, leaves);
  tape.backward(out);
  return {out.scalar(), theta.gather_grad(leaves)};
}

template <Objective F>
double evaluate(const ParamVector& theta, F&& objective) {
  Tape tape;
  const auto leaves = theta.bind(tape);
  return objective(tape, leaves).scalar();
}

struct FiniteDiffReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<std::size_t> checked;
  bool passed = false;
};

struct FiniteDiffOptions {
  std::size_t num_params = 20;
  double step = 1e-5;
  double tol = 1e-4;
  // Denominator floor for the relative error, so that parameters whose true
  // gradient is zero are judged on absolute error.
  double floor = 1e-5;
  std::uint64_t seed = 0;
};

// Compares analytic gradients with central differences on a random subset of
// parameters. Passes when the worst relative error is strictly below tol.
template <Objective F>
FiniteDiffReport finite_diff_check(const ParamVector& theta, F&& objective, const FiniteDiffOptions& opt = {}) {
  const ValueAndGrad analytic = value_and_grad(theta, objective);

  std::vector<std::size_t> idx(theta.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(opt.seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(opt.num_params, idx.size()));
  std::sort(idx.begin(), idx.end());

  FiniteDiffReport report;
  report.checked = idx;
  ParamVector probe = theta;
  for (std::size_t i : idx) {
    const double orig = probe[i];
    probe[i] = orig + opt.step;
    const double up = evaluate(probe, objective);
    probe[i] = orig - opt.step;
    const double down = evaluate(probe, objective);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * opt.step);
    const double a = analytic.grad[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), opt.floor});
    const double rel = std::abs(a - numeric) / denom;
    if (rel >= report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_index = i;
    }
  }
  report.passed = report.max_rel_error < opt.tol;
  return report;
}

}  // namespace incse::grad
