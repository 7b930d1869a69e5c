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
#include <cstdint>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "incse/continual/importance.hpp"
#include "incse/data/synth.hpp"
#include "incse/error.hpp"
#include "incse/grad/check.hpp"
#include "incse/harness/optim.hpp"
#include "incse/loss/sdr.hpp"
#include "incse/model/enhancer.hpp"

namespace incse::harness {

using continual::ImportanceState;
using continual::MagnitudePair;
using continual::PathAccumulator;
using continual::RegConfig;

enum class Strategy { kNone, kFinetune, kSeril };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kNone: return "none";
    case Strategy::kFinetune: return "finetune";
    case Strategy::kSeril: return "seril";
  }
  return "unknown";
}

inline Strategy parse_strategy(std::string_view s) {
  if (s == "none") return Strategy::kNone;
  if (s == "finetune") return Strategy::kFinetune;
  if (s == "seril") return Strategy::kSeril;
  ::incse::detail::fail(ErrorCode::kValidation, "unknown strategy '", s, "'");
}

struct TrainConfig {
  OptimizerKind optimizer = OptimizerKind::kAdam;
  double lr = 1e-3;
  int epochs = 10;
  int batch_size = 4;
  double grad_clip = 5.0;
  Strategy strategy = Strategy::kSeril;
  RegConfig reg;
  std::uint64_t seed = 0;
};

inline void validate(const TrainConfig& c) {
  INCSE_CHECK(c.lr > 0.0, ErrorCode::kValidation, "lr must be > 0");
  INCSE_CHECK(c.epochs >= 0, ErrorCode::kValidation, "epochs must be >= 0");
  INCSE_CHECK(c.batch_size >= 1, ErrorCode::kValidation, "batch_size must be >= 1");
  INCSE_CHECK(c.grad_clip >= 0.0, ErrorCode::kValidation, "grad_clip must be >= 0");
  continual::validate(c.reg);
}

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> step_loss;
  std::size_t steps = 0;
};

// Mean utterance loss over the batch, plus the importance penalty when a
// state from a previous task is given.
inline grad::Var batch_objective(const model::Enhancer& m, grad::Tape& tape, const std::vector<grad::Var>& leaves,
                                 std::span<const MagnitudePair* const> batch, const ImportanceState* state,
                                 const RegConfig& reg) {
  INCSE_CHECK(!batch.empty(), ErrorCode::kEmptyDataset, "empty batch");
  grad::Var total;
  for (const MagnitudePair* p : batch) {
    const grad::Var l = loss::loss_neg_sdr(m, tape, leaves, p->noisy, p->clean);
    total = total.valid() ? grad::add(total, l) : l;
  }
  total = grad::scale(total, 1.0 / static_cast<double>(batch.size()));
  if (state != nullptr && state->task_index >= 1 && reg.lambda != 0.0)
    total = grad::add(total, continual::penalty(tape, leaves, *state, reg));
  return total;
}

// Minibatch training on one task. Under kSeril the penalty from `state` is
// active (required once task_index >= 1). When `acc` is given, every step
// feeds it the unclipped gradient of the full objective and the realized
// parameter change.
inline TrainLog train_task(model::Enhancer& m, std::span<const MagnitudePair> data, const TrainConfig& cfg,
                           const ImportanceState* state = nullptr, PathAccumulator* acc = nullptr,
                           std::ostream* progress = nullptr) {
  validate(cfg);
  INCSE_CHECK(!data.empty(), ErrorCode::kEmptyDataset, "train_task: empty training set");
  const ImportanceState* active_state = nullptr;
  if (cfg.strategy == Strategy::kSeril) {
    INCSE_CHECK(state != nullptr, ErrorCode::kInvalidArgument, "seril training needs an importance state");
    active_state = state;
  }

  Optimizer opt(cfg.optimizer, cfg.lr);
  TrainLog log;
  std::vector<std::size_t> order(data.size());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(data::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5eed));
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<const MagnitudePair*> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back(&data[order[i]]);

      grad::ValueAndGrad vg = grad::value_and_grad(m.params(), [&](grad::Tape& tape, const std::vector<grad::Var>& leaves) {
        return batch_objective(m, tape, leaves, batch, active_state, cfg.reg);
      });
      const grad::ParamVector raw = vg.grad;
      clip_global_norm(vg.grad, cfg.grad_clip);
      if (acc != nullptr) {
        const grad::ParamVector before = m.params();
        opt.step(m.params(), vg.grad);
        acc->accumulate(raw, before, m.params());
      } else {
        opt.step(m.params(), vg.grad);
      }
      loss_sum += vg.value;
      log.step_loss.push_back(vg.value);
      ++batches;
      ++log.steps;
    }
    log.epoch_loss.push_back(loss_sum / static_cast<double>(batches));
    if (progress != nullptr)
      *progress << "  epoch " << (epoch + 1) << "/" << cfg.epochs << " loss " << log.epoch_loss.back() << '\n';
  }
  return log;
}

}  // namespace incse::harness
