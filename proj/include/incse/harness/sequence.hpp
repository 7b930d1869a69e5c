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
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "incse/continual/importance.hpp"
#include "incse/error.hpp"
#include "incse/harness/evaluate.hpp"
#include "incse/harness/train.hpp"
#include "incse/model/enhancer.hpp"

namespace incse::harness {

// Mean SDR of model M_i on test set E_j. Cells of models that were never
// trained stay empty.
struct EvalMatrix {
  std::vector<std::string> model_ids;
  std::vector<std::string> testset_ids;
  std::vector<std::vector<std::optional<double>>> scores;

  static EvalMatrix grid(std::size_t models, std::size_t testsets) {
    EvalMatrix m;
    for (std::size_t i = 0; i < models; ++i) m.model_ids.push_back("M" + std::to_string(i));
    for (std::size_t j = 0; j < testsets; ++j) m.testset_ids.push_back("E" + std::to_string(j));
    m.scores.assign(models, std::vector<std::optional<double>>(testsets));
    return m;
  }

  std::size_t num_models() const { return model_ids.size(); }
  std::size_t num_testsets() const { return testset_ids.size(); }

  double at(std::size_t i, std::size_t j) const {
    INCSE_CHECK(i < num_models() && j < num_testsets() && scores[i][j].has_value(), ErrorCode::kIncompleteMatrix,
                "no score for model ", i, " on test set ", j);
    return *scores[i][j];
  }

  bool row_complete(std::size_t i) const {
    for (const auto& c : scores[i])
      if (!c || !std::isfinite(*c)) return false;
    return true;
  }

  bool complete() const {
    for (std::size_t i = 0; i < num_models(); ++i)
      if (!row_complete(i)) return false;
    return !scores.empty();
  }

  bool operator==(const EvalMatrix&) const = default;
};

struct SequenceConfig {
  TrainConfig pretrain;
  TrainConfig adapt;
  Strategy strategy = Strategy::kSeril;
  int workers = 1;
};

// Model after the offline phase together with the importance state of its
// training task.
struct Pretrained {
  model::Enhancer model;
  ImportanceState state;
  TrainLog log;
};

struct SequenceResult {
  EvalMatrix matrix;
  std::vector<double> unprocessed;
  std::vector<model::Enhancer> models;
  std::vector<ImportanceState> states;
  std::vector<TrainLog> logs;
};

// Plain training of M_0 with the path accumulator running, then the first
// importance fold from the same data.
inline Pretrained pretrain(const model::EnhancerConfig& model_cfg, std::span<const MagnitudePair> task0,
                           const TrainConfig& cfg, std::ostream* progress = nullptr) {
  Pretrained out{model::Enhancer(model_cfg), {}, {}};
  out.state = ImportanceState::initial(out.model.params());
  PathAccumulator acc(out.model.params());
  TrainConfig plain = cfg;
  plain.strategy = Strategy::kFinetune;
  if (progress) *progress << "pretrain: " << task0.size() << " pairs\n";
  out.log = train_task(out.model, task0, plain, nullptr, &acc, progress);
  if (acc.steps() > 0) out.state = continual::finalize_task(out.state, acc, out.model, task0, cfg.reg);
  return out;
}

// Sequential adaptation from a pretrained M_0 over tasks[1..], scoring every
// model on every test set. tasks[0] is only used when pretraining here.
inline SequenceResult adapt_sequence(const Pretrained& start, const std::vector<std::vector<MagnitudePair>>& tasks,
                                     const std::vector<std::vector<MagnitudePair>>& tests, const SequenceConfig& cfg,
                                     std::ostream* progress = nullptr) {
  INCSE_CHECK(!tasks.empty(), ErrorCode::kEmptyDataset, "run_sequence: no tasks");
  INCSE_CHECK(!tests.empty(), ErrorCode::kEmptyDataset, "run_sequence: no test sets");
  SequenceResult r;
  r.matrix = EvalMatrix::grid(tasks.size(), tests.size());
  for (const auto& t : tests) r.unprocessed.push_back(evaluate_unprocessed(t));

  model::Enhancer current = start.model;
  ImportanceState state = start.state;
  r.models.push_back(current);
  r.states.push_back(state);
  r.logs.push_back(start.log);

  auto score_row = [&](std::size_t i, const model::Enhancer& m) {
    for (std::size_t j = 0; j < tests.size(); ++j) r.matrix.scores[i][j] = evaluate(m, tests[j], cfg.workers);
  };
  score_row(0, current);
  if (cfg.strategy == Strategy::kNone) return r;

  for (std::size_t t = 1; t < tasks.size(); ++t) {
    TrainConfig tc = cfg.adapt;
    tc.strategy = cfg.strategy;
    tc.seed = data::derive_seed(cfg.adapt.seed, t);
    if (progress) *progress << to_string(cfg.strategy) << ": adapting to task " << t << '\n';
    if (cfg.strategy == Strategy::kSeril) {
      PathAccumulator acc(current.params());
      r.logs.push_back(train_task(current, tasks[t], tc, &state, &acc, progress));
      state = continual::finalize_task(state, acc, current, tasks[t], tc.reg);
    } else {
      r.logs.push_back(train_task(current, tasks[t], tc, nullptr, nullptr, progress));
    }
    r.models.push_back(current);
    r.states.push_back(state);
    score_row(t, current);
  }
  return r;
}

inline SequenceResult run_sequence(const model::EnhancerConfig& model_cfg,
                                   const std::vector<std::vector<MagnitudePair>>& tasks,
                                   const std::vector<std::vector<MagnitudePair>>& tests, const SequenceConfig& cfg,
                                   std::ostream* progress = nullptr) {
  INCSE_CHECK(!tasks.empty(), ErrorCode::kEmptyDataset, "run_sequence: no tasks");
  const Pretrained start = pretrain(model_cfg, tasks.front(), cfg.pretrain, progress);
  return adapt_sequence(start, tasks, tests, cfg, progress);
}

struct ForgettingReport {
  // score(M_t, E_t) - score(M_last, E_t) for t < last.
  std::vector<double> per_task_drop;
  double average_forgetting = 0.0;
  // score(M_t, E_t) - score(M_0, E_t) for t >= 1.
  std::vector<double> adaptation_gain;
  // average_forgetting / comparison average_forgetting; empty when there is
  // no comparison or the comparison forgets nothing.
  std::optional<double> relative_forgetting_vs_finetune;
};

inline ForgettingReport compute_forgetting(const EvalMatrix& m, const EvalMatrix* finetune = nullptr) {
  INCSE_CHECK(m.complete(), ErrorCode::kIncompleteMatrix, "compute_forgetting: incomplete matrix");
  INCSE_CHECK(m.num_models() >= 2 && m.num_testsets() >= m.num_models(), ErrorCode::kIncompleteMatrix,
              "compute_forgetting needs >= 2 models and a test set per task");
  ForgettingReport r;
  const std::size_t last = m.num_models() - 1;
  for (std::size_t t = 0; t < last; ++t) r.per_task_drop.push_back(m.at(t, t) - m.at(last, t));
  double sum = 0.0;
  for (double d : r.per_task_drop) sum += d;
  r.average_forgetting = sum / static_cast<double>(r.per_task_drop.size());
  for (std::size_t t = 1; t <= last; ++t) r.adaptation_gain.push_back(m.at(t, t) - m.at(0, t));
  if (finetune != nullptr) {
    const ForgettingReport base = compute_forgetting(*finetune);
    if (base.average_forgetting != 0.0) r.relative_forgetting_vs_finetune = r.average_forgetting / base.average_forgetting;
  }
  return r;
}

}  // namespace incse::harness
