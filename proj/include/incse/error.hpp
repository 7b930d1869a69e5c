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

#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

namespace incse {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kLayoutMismatch,
  kInputTooShort,
  kColaViolation,
  kZeroPower,
  kMalformedHeader,
  kUnsupportedFormat,
  kUndefinedReference,
  kEmptyDataset,
  kEmptyPath,
  kIncompleteMatrix,
  kIo,
  kParse,
  kValidation,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kLayoutMismatch: return "layout_mismatch";
    case ErrorCode::kInputTooShort: return "input_too_short";
    case ErrorCode::kColaViolation: return "cola_violation";
    case ErrorCode::kZeroPower: return "zero_power";
    case ErrorCode::kMalformedHeader: return "malformed_header";
    case ErrorCode::kUnsupportedFormat: return "unsupported_format";
    case ErrorCode::kUndefinedReference: return "undefined_reference";
    case ErrorCode::kEmptyDataset: return "empty_dataset";
    case ErrorCode::kEmptyPath: return "empty_path";
    case ErrorCode::kIncompleteMatrix: return "incomplete_matrix";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kValidation: return "validation";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

namespace detail {

template <typename... Args>
[[noreturn]] void fail(ErrorCode code, Args&&... args) {
  std::ostringstream oss;
  (oss << ... << std::forward<Args>(args));
  throw Error(code, oss.str());
}

}  // namespace detail

#define INCSE_CHECK(cond, code, ...)                 \
  do {                                               \
    if (!(cond)) ::incse::detail::fail(code, __VA_ARGS__); \
  } while (0)

}  // namespace incse
