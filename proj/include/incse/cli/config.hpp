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

// Run configuration: one JSON document covering analysis, model, training,
// regularization and the task sequence. Unknown keys are rejected.
//
//   {
//     "seed": 1234,
//     "data_dir": "data", "out_dir": "runs/desk", "workers": 1,
//     "stft":  {"fft_size": 512, "window_ms": 32, "hop_ms": 16, "window": "hamming"},
//     "model": {"num_lstm_layers": 2, "hidden_dim": 64, "feature_dim": 257},
//     "train": {"optimizer": "adam", "lr": 0.001, "batch_size": 4, "grad_clip": 5,
//               "pretrain_epochs": 30, "adapt_epochs": 10},
//     "reg":   {"lambda": 1, "alpha_interp": 0.5, "beta": 0.5, "epsilon": 0.001},
//     "tasks": [{"task_id": "T0", "noise_kinds": ["white"], "snr_levels_db": [0, 6],
//                "num_utterances": 8, "duration_s": 1.0,
//                "clean_kind": "harmonic_voice", "clean_dir": "", "noise_dir": ""}, ...],
//     "tests": [ same shape as tasks, one per task ]
//   }
//
// Per-task corpus seeds, the model init seed and the shuffling seeds are all
// derived from "seed".

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "incse/data/manifest.hpp"
#include "incse/dsp/stft.hpp"
#include "incse/error.hpp"
#include "incse/harness/sequence.hpp"
#include "incse/harness/train.hpp"
#include "incse/model/enhancer.hpp"

namespace incse::cli {

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path data_dir = "data";
  std::filesystem::path out_dir = "runs";
  int workers = 1;
  dsp::StftConfig stft;
  model::EnhancerConfig model;
  harness::TrainConfig train;
  int pretrain_epochs = 30;
  int adapt_epochs = 10;
  std::vector<data::TaskSpec> tasks;
  std::vector<data::TaskSpec> tests;
};

namespace config_detail {

using nlohmann::json;

// Typed access to one JSON object that remembers which keys were read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    INCSE_CHECK(j.is_object(), ErrorCode::kValidation, "config: '", label(), "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception&) {
      ::incse::detail::fail(ErrorCode::kValidation, "config: bad value for key '", qualify(key), "'");
    }
  }

  bool has(const char* key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  Section child(const char* key) {
    seen_.insert(key);
    return Section(j_.contains(key) ? j_.at(key) : empty(), qualify(key));
  }

  const json& raw(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }

  std::string qualify(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void reject_unknown() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.contains(k)) ::incse::detail::fail(ErrorCode::kValidation, "config: unknown key '", qualify(k), "'");
  }

 private:
  static const json& empty() {
    static const json e = json::object();
    return e;
  }
  std::string label() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

inline data::TaskSpec parse_task(const json& j, const std::string& path, data::Split split) {
  Section s(j, path);
  data::TaskSpec t;
  t.split = split;
  s.read("task_id", t.task_id);
  std::vector<std::string> kinds;
  s.read("noise_kinds", kinds);
  for (const auto& k : kinds) t.noise_kinds.push_back(data::parse_noise_kind(k));
  s.read("snr_levels_db", t.snr_levels_db);
  s.read("num_utterances", t.num_utterances);
  s.read("duration_s", t.duration_s);
  std::string clean_kind = "harmonic_voice";
  s.read("clean_kind", clean_kind);
  if (clean_kind == "harmonic_voice") {
    t.clean_kind = data::CleanKind::kHarmonicVoice;
  } else if (clean_kind == "external_wav") {
    t.clean_kind = data::CleanKind::kExternalWav;
  } else {
    ::incse::detail::fail(ErrorCode::kValidation, "config: '", s.qualify("clean_kind"), "' must be harmonic_voice or external_wav");
  }
  std::string clean_dir, noise_dir;
  s.read("clean_dir", clean_dir);
  s.read("noise_dir", noise_dir);
  t.clean_dir = clean_dir;
  t.noise_dir = noise_dir;
  s.reject_unknown();
  return t;
}

inline std::vector<data::TaskSpec> parse_tasks(Section& root, const char* key, data::Split split) {
  std::vector<data::TaskSpec> out;
  if (!root.has(key)) return out;
  const json& arr = root.raw(key);
  INCSE_CHECK(arr.is_array(), ErrorCode::kValidation, "config: '", key, "' must be an array");
  for (std::size_t i = 0; i < arr.size(); ++i)
    out.push_back(parse_task(arr[i], std::string(key) + "[" + std::to_string(i) + "]", split));
  return out;
}

inline json task_to_json(const data::TaskSpec& t) {
  std::vector<std::string> kinds;
  for (auto k : t.noise_kinds) kinds.emplace_back(data::to_string(k));
  return {{"task_id", t.task_id},
          {"noise_kinds", kinds},
          {"snr_levels_db", t.snr_levels_db},
          {"num_utterances", t.num_utterances},
          {"duration_s", t.duration_s},
          {"clean_kind", t.clean_kind == data::CleanKind::kHarmonicVoice ? "harmonic_voice" : "external_wav"},
          {"clean_dir", t.clean_dir.string()},
          {"noise_dir", t.noise_dir.string()}};
}

}  // namespace config_detail

// Seeds of everything random in a run, derived from RunConfig::seed.
inline std::uint64_t task_seed(const RunConfig& c, data::Split split, std::size_t index) {
  return data::derive_seed(c.seed, split == data::Split::kTrain ? 0x7a5cull : 0x7e57ull, index) % (1ull << 24);
}
inline std::uint64_t model_seed(const RunConfig& c) { return data::derive_seed(c.seed, 0x30de1ull); }
inline std::uint64_t pretrain_seed(const RunConfig& c) { return data::derive_seed(c.seed, 0x9e7ull); }
inline std::uint64_t adapt_seed(const RunConfig& c) { return data::derive_seed(c.seed, 0xada9ull); }

inline void validate(const RunConfig& c) {
  INCSE_CHECK(c.workers >= 1, ErrorCode::kValidation, "config: workers must be >= 1");
  INCSE_CHECK(c.pretrain_epochs >= 1, ErrorCode::kValidation, "config: train.pretrain_epochs must be >= 1");
  INCSE_CHECK(c.adapt_epochs >= 1, ErrorCode::kValidation, "config: train.adapt_epochs must be >= 1");
  dsp::validate(c.stft);
  model::validate(c.model);
  INCSE_CHECK(c.model.feature_dim == c.stft.num_bins(), ErrorCode::kValidation, "config: model.feature_dim (",
              c.model.feature_dim, ") must equal fft_size/2+1 (", c.stft.num_bins(), ")");
  harness::validate(c.train);
  INCSE_CHECK(!c.tasks.empty(), ErrorCode::kValidation, "config: at least one task is required");
  INCSE_CHECK(c.tests.size() == c.tasks.size(), ErrorCode::kValidation, "config: need one test set per task (",
              c.tasks.size(), " tasks, ", c.tests.size(), " tests)");
  std::set<std::string> ids;
  for (const auto* list : {&c.tasks, &c.tests})
    for (const auto& t : *list) {
      data::validate(t);
      INCSE_CHECK(ids.insert(t.task_id).second, ErrorCode::kValidation, "config: duplicate task_id '", t.task_id, "'");
    }
}

// Fills derived seeds into the task specs.
inline void assign_seeds(RunConfig& c) {
  for (std::size_t i = 0; i < c.tasks.size(); ++i) c.tasks[i].seed = task_seed(c, data::Split::kTrain, i);
  for (std::size_t i = 0; i < c.tests.size(); ++i) c.tests[i].seed = task_seed(c, data::Split::kTest, i);
  c.model.seed = model_seed(c);
}

inline RunConfig parse_run_config(const nlohmann::json& j) {
  using config_detail::Section;
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);
  std::string data_dir = c.data_dir.string(), out_dir = c.out_dir.string();
  root.read("data_dir", data_dir);
  root.read("out_dir", out_dir);
  c.data_dir = data_dir;
  c.out_dir = out_dir;
  root.read("workers", c.workers);

  Section stft = root.child("stft");
  stft.read("fft_size", c.stft.fft_size);
  stft.read("window_ms", c.stft.window_ms);
  stft.read("hop_ms", c.stft.hop_ms);
  std::string window = "hamming";
  stft.read("window", window);
  INCSE_CHECK(window == "hamming", ErrorCode::kValidation, "config: 'stft.window' must be hamming");
  stft.reject_unknown();

  Section model = root.child("model");
  model.read("num_lstm_layers", c.model.num_lstm_layers);
  model.read("hidden_dim", c.model.hidden_dim);
  model.read("feature_dim", c.model.feature_dim);
  model.reject_unknown();

  Section train = root.child("train");
  std::string optimizer(harness::to_string(c.train.optimizer));
  train.read("optimizer", optimizer);
  c.train.optimizer = harness::parse_optimizer(optimizer);
  train.read("lr", c.train.lr);
  train.read("batch_size", c.train.batch_size);
  train.read("grad_clip", c.train.grad_clip);
  train.read("pretrain_epochs", c.pretrain_epochs);
  train.read("adapt_epochs", c.adapt_epochs);
  train.reject_unknown();

  Section reg = root.child("reg");
  reg.read("lambda", c.train.reg.lambda);
  reg.read("alpha_interp", c.train.reg.alpha_interp);
  reg.read("beta", c.train.reg.beta);
  reg.read("epsilon", c.train.reg.epsilon);
  reg.reject_unknown();

  c.tasks = config_detail::parse_tasks(root, "tasks", data::Split::kTrain);
  c.tests = config_detail::parse_tasks(root, "tests", data::Split::kTest);
  root.reject_unknown();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  INCSE_CHECK(in.good(), ErrorCode::kValidation, "cannot open config ", path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    ::incse::detail::fail(ErrorCode::kParse, "config ", path.string(), ": ", e.what());
  }
  return parse_run_config(j);
}

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json tasks = nlohmann::json::array(), tests = nlohmann::json::array();
  for (const auto& t : c.tasks) tasks.push_back(config_detail::task_to_json(t));
  for (const auto& t : c.tests) tests.push_back(config_detail::task_to_json(t));
  return {{"seed", c.seed},
          {"data_dir", c.data_dir.string()},
          {"out_dir", c.out_dir.string()},
          {"workers", c.workers},
          {"stft", {{"fft_size", c.stft.fft_size}, {"window_ms", c.stft.window_ms}, {"hop_ms", c.stft.hop_ms}, {"window", "hamming"}}},
          {"model",
           {{"num_lstm_layers", c.model.num_lstm_layers}, {"hidden_dim", c.model.hidden_dim}, {"feature_dim", c.model.feature_dim}}},
          {"train",
           {{"optimizer", harness::to_string(c.train.optimizer)},
            {"lr", c.train.lr},
            {"batch_size", c.train.batch_size},
            {"grad_clip", c.train.grad_clip},
            {"pretrain_epochs", c.pretrain_epochs},
            {"adapt_epochs", c.adapt_epochs}}},
          {"reg",
           {{"lambda", c.train.reg.lambda},
            {"alpha_interp", c.train.reg.alpha_interp},
            {"beta", c.train.reg.beta},
            {"epsilon", c.train.reg.epsilon}}},
          {"tasks", tasks},
          {"tests", tests}};
}

// Training and sequence settings for the two phases.
inline harness::SequenceConfig sequence_config(const RunConfig& c, harness::Strategy strategy) {
  harness::SequenceConfig s;
  s.pretrain = c.train;
  s.pretrain.epochs = c.pretrain_epochs;
  s.pretrain.seed = pretrain_seed(c);
  s.adapt = c.train;
  s.adapt.epochs = c.adapt_epochs;
  s.adapt.seed = adapt_seed(c);
  s.strategy = strategy;
  s.workers = c.workers;
  return s;
}

}  // namespace incse::cli
