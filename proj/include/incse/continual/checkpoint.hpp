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
#include "incse/continual/importance.hpp"

// Importance-state checkpoint:
//   "INCSEIMP" u32 version
//   i32 task_index
//   layout table
//   anchor, fisher_tilde, path_scores (each u64 count + f64 values)
namespace incse::continual {

inline constexpr char kStateMagic[9] = "INCSEIMP";
inline constexpr std::uint32_t kStateVersion = 1;

inline void save_state(std::ostream& out, const ImportanceState& s) {
  s.check_aligned();
  binio::put_magic(out, kStateMagic, kStateVersion);
  binio::put<std::int32_t>(out, s.task_index);
  binio::put_layout(out, s.anchor.layout());
  binio::put_array(out, s.anchor.values());
  binio::put_array(out, s.fisher_tilde.values.values());
  binio::put_array(out, s.path_scores);
}

inline ImportanceState load_state(std::istream& in) {
  binio::expect_magic(in, kStateMagic, kStateVersion);
  ImportanceState s;
  s.task_index = binio::get<std::int32_t>(in);
  INCSE_CHECK(s.task_index >= 0, ErrorCode::kMalformedHeader, "negative task index");
  const grad::Layout layout = binio::get_layout(in);
  s.anchor = ParamVector(layout, binio::get_array(in, layout.total()));
  s.fisher_tilde.values = ParamVector(layout, binio::get_array(in, layout.total()));
  s.path_scores = binio::get_array(in, layout.total());
  return s;
}

inline void save_state(const std::filesystem::path& path, const ImportanceState& s) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "cannot write ", path.string());
  save_state(out, s);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "write failed for ", path.string());
}

inline ImportanceState load_state(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  INCSE_CHECK(in.good(), ErrorCode::kIo, "cannot open ", path.string());
  return load_state(in);
}

}  // namespace incse::continual
