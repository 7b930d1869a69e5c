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

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include <Eigen/Dense>

#include "incse/error.hpp"
#include "incse/grad/param.hpp"

// Little-endian binary helpers shared by the checkpoint formats.
namespace incse::binio {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

template <typename T>
  requires std::is_trivially_copyable_v<T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
  requires std::is_trivially_copyable_v<T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  INCSE_CHECK(in.good(), ErrorCode::kMalformedHeader, "truncated checkpoint");
  return v;
}

inline void put_string(std::ostream& out, const std::string& s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string get_string(std::istream& in) {
  const auto n = get<std::uint32_t>(in);
  INCSE_CHECK(n < (1u << 20), ErrorCode::kMalformedHeader, "implausible string length ", n);
  std::string s(n, '\0');
  in.read(s.data(), n);
  INCSE_CHECK(in.good(), ErrorCode::kMalformedHeader, "truncated checkpoint");
  return s;
}

inline void put_magic(std::ostream& out, const char (&magic)[9], std::uint32_t version) {
  out.write(magic, 8);
  put(out, version);
}

inline void expect_magic(std::istream& in, const char (&magic)[9], std::uint32_t version) {
  char buf[8] = {};
  in.read(buf, 8);
  INCSE_CHECK(in.good() && std::memcmp(buf, magic, 8) == 0, ErrorCode::kMalformedHeader, "bad magic, expected ",
              magic);
  const auto v = get<std::uint32_t>(in);
  INCSE_CHECK(v == version, ErrorCode::kUnsupportedFormat, "unsupported version ", v, " (expected ", version, ")");
}

inline void put_layout(std::ostream& out, const grad::Layout& layout) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(layout.slots().size()));
  for (const auto& s : layout.slots()) {
    put_string(out, s.name);
    put<std::int64_t>(out, s.rows);
    put<std::int64_t>(out, s.cols);
    put<std::uint64_t>(out, s.offset);
  }
}

inline grad::Layout get_layout(std::istream& in) {
  grad::Layout layout;
  const auto n = get<std::uint32_t>(in);
  for (std::uint32_t i = 0; i < n; ++i) {
    auto name = get_string(in);
    const auto rows = get<std::int64_t>(in);
    const auto cols = get<std::int64_t>(in);
    const auto offset = get<std::uint64_t>(in);
    INCSE_CHECK(offset == layout.total(), ErrorCode::kMalformedHeader, "non-contiguous layout at ", name);
    layout.add(std::move(name), rows, cols);
  }
  return layout;
}

inline void put_array(std::ostream& out, const Eigen::VectorXd& v) {
  put<std::uint64_t>(out, static_cast<std::uint64_t>(v.size()));
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline Eigen::VectorXd get_array(std::istream& in, std::size_t expected) {
  const auto n = get<std::uint64_t>(in);
  INCSE_CHECK(n == expected, ErrorCode::kLayoutMismatch, "array of ", n, " values, layout expects ", expected);
  Eigen::VectorXd v(static_cast<Eigen::Index>(n));
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  INCSE_CHECK(in.good(), ErrorCode::kMalformedHeader, "truncated checkpoint");
  return v;
}

}  // namespace incse::binio
