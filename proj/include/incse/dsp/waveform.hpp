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
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "incse/error.hpp"

namespace incse::dsp {

inline constexpr int kSampleRateHz = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate_hz = kSampleRateHz;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

inline void validate(const Waveform& w) {
  INCSE_CHECK(w.sample_rate_hz > 0, ErrorCode::kInvalidArgument,
              "sample rate must be positive, got ", w.sample_rate_hz);
  for (double s : w.samples) {
    INCSE_CHECK(std::isfinite(s), ErrorCode::kInvalidArgument,
                "waveform contains non-finite samples");
  }
}

inline double power(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

inline double peak(std::span<const double> x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

// RIFF/WAVE, PCM16, mono, little-endian.
namespace wav_detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xff));
}

inline void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(static_cast<unsigned char>(v & 0xff));
  out.push_back(static_cast<unsigned char>((v >> 8) & 0xff));
}

inline std::int16_t quantize(double s) {
  const double clipped = std::clamp(s, -1.0, 1.0);
  const double scaled = std::round(clipped * 32768.0);
  return static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
}

}  // namespace wav_detail

inline Waveform decode_wav(std::span<const unsigned char> bytes) {
  using namespace wav_detail;
  INCSE_CHECK(bytes.size() >= 12, ErrorCode::kMalformedHeader, "malformed header: file too short");
  INCSE_CHECK(std::memcmp(bytes.data(), "RIFF", 4) == 0 && std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
              ErrorCode::kMalformedHeader, "malformed header: missing RIFF/WAVE tags");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    const std::uint32_t len = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    INCSE_CHECK(body + len <= bytes.size(), ErrorCode::kMalformedHeader,
                "malformed header: chunk overruns file");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      INCSE_CHECK(len >= 16, ErrorCode::kMalformedHeader, "malformed header: short fmt chunk");
      format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = read_u32(bytes.data() + body + 4);
      bits = read_u16(bytes.data() + body + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      INCSE_CHECK(have_fmt, ErrorCode::kMalformedHeader, "malformed header: data before fmt");
      INCSE_CHECK(format == 1, ErrorCode::kUnsupportedFormat, "unsupported format: not PCM (format ", format, ")");
      INCSE_CHECK(channels == 1, ErrorCode::kUnsupportedFormat, "unsupported format: ", channels, " channels, expected mono");
      INCSE_CHECK(bits == 16, ErrorCode::kUnsupportedFormat, "unsupported format: ", bits, "-bit, expected PCM16");
      INCSE_CHECK(rate > 0, ErrorCode::kMalformedHeader, "malformed header: zero sample rate");
      Waveform w;
      w.sample_rate_hz = static_cast<int>(rate);
      w.samples.resize(len / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(read_u16(bytes.data() + body + 2 * i));
        w.samples[i] = static_cast<double>(raw) / 32768.0;
      }
      return w;
    }
    pos = body + len + (len & 1u);
  }
  ::incse::detail::fail(ErrorCode::kMalformedHeader, "malformed header: no data chunk");
}

inline std::vector<unsigned char> encode_wav(const Waveform& w) {
  using namespace wav_detail;
  validate(w);
  const auto data_len = static_cast<std::uint32_t>(w.samples.size() * 2);
  std::vector<unsigned char> out;
  out.reserve(44 + data_len);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_len);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_len);
  for (double s : w.samples) put_u16(out, static_cast<std::uint16_t>(quantize(s)));
  return out;
}

inline Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  INCSE_CHECK(in.good(), ErrorCode::kIo, "cannot open ", path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), std::string(e.what()) + " (" + path.string() + ")");
  }
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w) {
  const auto bytes = encode_wav(w);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "cannot write ", path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  INCSE_CHECK(out.good(), ErrorCode::kIo, "write failed for ", path.string());
}

}  // namespace incse::dsp
