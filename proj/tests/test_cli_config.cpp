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

#include <filesystem>
#include <fstream>
#include <optional>

#include <gtest/gtest.h>

#include "incse/cli/config.hpp"

namespace {

using namespace incse;
using nlohmann::json;

json minimal() {
  return json::parse(R"({
    "seed": 5,
    "tasks": [{"task_id": "T0", "noise_kinds": ["white"], "num_utterances": 2},
              {"task_id": "T1", "noise_kinds": ["clicks"], "num_utterances": 2}],
    "tests": [{"task_id": "E0", "noise_kinds": ["white"], "num_utterances": 2},
              {"task_id": "E1", "noise_kinds": ["clicks"], "num_utterances": 2}]
  })");
}

std::optional<ErrorCode> code_of(const json& j) {
  try {
    cli::RunConfig c = cli::parse_run_config(j);
    cli::validate(c);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

std::string message_of(const json& j) {
  try {
    cli::parse_run_config(j);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

TEST(RunConfig, DefaultsFillMissingSections) {
  cli::RunConfig c = cli::parse_run_config(minimal());
  cli::assign_seeds(c);
  cli::validate(c);
  EXPECT_EQ(c.model.num_lstm_layers, 2);
  EXPECT_EQ(c.model.hidden_dim, 64);
  EXPECT_EQ(c.stft.fft_size, 512);
  EXPECT_EQ(c.train.reg.lambda, 1.0);
  EXPECT_EQ(c.pretrain_epochs, 30);
  EXPECT_EQ(c.tasks[1].noise_kinds, std::vector<data::NoiseKind>{data::NoiseKind::kClicks});
  EXPECT_EQ(c.tests[0].split, data::Split::kTest);
  EXPECT_EQ(c.tasks[0].snr_levels_db, data::default_snr_levels());
}

TEST(RunConfig, SeedsAreDerivedAndDistinct) {
  cli::RunConfig c = cli::parse_run_config(minimal());
  cli::assign_seeds(c);
  std::set<std::uint64_t> seeds;
  for (const auto& t : c.tasks) seeds.insert(t.seed);
  for (const auto& t : c.tests) seeds.insert(t.seed);
  EXPECT_EQ(seeds.size(), 4u);
  cli::RunConfig d = cli::parse_run_config(minimal());
  cli::assign_seeds(d);
  EXPECT_EQ(c.tasks[1].seed, d.tasks[1].seed);
  EXPECT_EQ(c.model.seed, d.model.seed);
  d.seed = 6;
  cli::assign_seeds(d);
  EXPECT_NE(c.tasks[1].seed, d.tasks[1].seed);
}

TEST(RunConfig, UnknownKeysAreNamed) {
  json j = minimal();
  j["reg"] = {{"lambda", 1.0}, {"lamda", 2.0}};
  EXPECT_EQ(code_of(j), ErrorCode::kValidation);
  EXPECT_NE(message_of(j).find("reg.lamda"), std::string::npos);

  j = minimal();
  j["tasks"][1]["snr"] = 3;
  EXPECT_NE(message_of(j).find("tasks[1].snr"), std::string::npos);

  j = minimal();
  j["extra"] = true;
  EXPECT_NE(message_of(j).find("'extra'"), std::string::npos);
}

TEST(RunConfig, BadValuesAreRejected) {
  json j = minimal();
  j["model"] = {{"feature_dim", 128}};
  EXPECT_EQ(code_of(j), ErrorCode::kValidation);

  j = minimal();
  j["tests"].erase(1);
  EXPECT_EQ(code_of(j), ErrorCode::kValidation);

  j = minimal();
  j["tests"][0]["task_id"] = "T1";
  EXPECT_EQ(code_of(j), ErrorCode::kValidation);

  j = minimal();
  j["train"] = {{"lr", "fast"}};
  EXPECT_EQ(code_of(j), ErrorCode::kValidation);

  j = minimal();
  j["reg"] = {{"beta", 1.5}};
  EXPECT_TRUE(code_of(j).has_value());

  j = minimal();
  j["tasks"][0]["noise_kinds"] = {"thunder"};
  EXPECT_TRUE(code_of(j).has_value());
}

TEST(RunConfig, LoadFromDisk) {
  const auto dir = std::filesystem::temp_directory_path() / "incse_test_cli_config";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "bad.json") << "{ \"seed\": ";
  try {
    cli::load_run_config(dir / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }
  EXPECT_THROW(cli::load_run_config(dir / "absent.json"), Error);

  std::ofstream(dir / "ok.json") << minimal().dump();
  const cli::RunConfig c = cli::load_run_config(dir / "ok.json");
  EXPECT_EQ(c.seed, 5u);
  std::filesystem::remove_all(dir);
}

TEST(RunConfig, JsonRoundTrip) {
  cli::RunConfig c = cli::parse_run_config(minimal());
  c.train.reg.beta = 0.25;
  c.adapt_epochs = 4;
  const cli::RunConfig back = cli::parse_run_config(cli::to_json(c));
  EXPECT_EQ(cli::to_json(back), cli::to_json(c));
}

TEST(RunConfig, SequenceConfigSplitsPhases) {
  cli::RunConfig c = cli::parse_run_config(minimal());
  c.pretrain_epochs = 7;
  c.adapt_epochs = 3;
  const auto s = cli::sequence_config(c, harness::Strategy::kFinetune);
  EXPECT_EQ(s.pretrain.epochs, 7);
  EXPECT_EQ(s.adapt.epochs, 3);
  EXPECT_NE(s.pretrain.seed, s.adapt.seed);
  EXPECT_EQ(s.strategy, harness::Strategy::kFinetune);
}

TEST(RunConfig, ShippedConfigsValidate) {
  for (const char* name : {"desk.json", "tiny.json", "large.json"}) {
    cli::RunConfig c = cli::load_run_config(std::filesystem::path(INCSE_CONFIG_DIR) / name);
    cli::assign_seeds(c);
    EXPECT_NO_THROW(cli::validate(c)) << name;
    EXPECT_EQ(c.tasks.size(), 5u) << name;
  }
}

}  // namespace
