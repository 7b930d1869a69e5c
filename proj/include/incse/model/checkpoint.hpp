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

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "incse/binio.hpp"
#include "incse/error.hpp"
#include "incse/model/enhancer.hpp"

// Model checkpoint:
//   "INCSEMDL" u32 version
//   i32 num_lstm_layers, i32 hidden_dim, i32 feature_dim, u64 seed
//   layout table (u32 count; per slot: string name, i64 rows, i64 cols, u64 offset)
//   u64 count, count x f64 parameter values
namespace incse::model {

inline constexpr char kModelMagic[9] = "INCSEMDL";
inline constexpr std::uint32_t kModelVersion = 1;

inline void save_model(std::ostream& out, const Enhancer& m) {
  binio::put_magic(out, kModelMagic, kModelVersion);
  const auto& c = m.config();
  binio::put<std::int32_t>(out, c.num_lstm_layers);
  binio::put<std::int32_t>(out, c.hidden_dim);
  binio::put<std::int32_t>(out, c.feature_dim);
  binio::put<std::uint64_t>(out, c.seed);
  binio::put_layout(out, m.params().layout());
  binio::put_array(out, m.params().values());
}

inline Enhancer load_model(std::istream& in) {
  binio::expect_magic(in, kModelMagic, kModelVersion);
  EnhancerConfig c;
  c.num_lstm_layers = binio::get<std::int32_t>(in);
  c.hidden_dim = binio::get<std::int32_t>(in);
  c.feature_dim = binio::get<std::int32_t>(in);
  c.seed = binio::get<std::uint64_t>(in);
  Enhancer m(c);
  const grad::Layout layout = binio::get_layout(in);
  INCSE_CHECK(layout == m.params().layout(), ErrorCode::kLayoutMismatch,
              "checkpoint layout does not match its declared config");
  m.restore(grad::ParamVector(layout, binio::get_array(in, layout.total())));
  return m;
}

inline void save_model(const std::filesystem::path& path, const Enhancer& m) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "cannot write ", path.string());
  save_model(out, m);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "write failed for ", path.string());
}

inline Enhancer load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  INCSE_CHECK(in.good(), ErrorCode::kIo, "cannot open ", path.string());
  return load_model(in);
}

}  // namespace incse::model
