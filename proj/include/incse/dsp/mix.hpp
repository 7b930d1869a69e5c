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
#include <random>

#include "incse/dsp/waveform.hpp"
#include "incse/error.hpp"

namespace incse::dsp {

inline double snr_db(std::span<const double> clean, std::span<const double> noise) {
  return 10.0 * std::log10(power(clean) / power(noise));
}

struct Mixture {
  Waveform noisy;
  Waveform scaled_noise;
  std::size_t offset = 0;
  double gain = 0.0;
};

// Crops a segment of `noise` at a random offset and adds it to `clean` with a
// gain that makes 10*log10(P_clean / P_noise) equal `snr`.
template <typename Rng>
Mixture mix_at_snr_detailed(const Waveform& clean, const Waveform& noise, double snr, Rng& rng) {
  INCSE_CHECK(clean.sample_rate_hz == noise.sample_rate_hz, ErrorCode::kInvalidArgument,
              "sample rate mismatch: ", clean.sample_rate_hz, " vs ", noise.sample_rate_hz);
  INCSE_CHECK(noise.size() >= clean.size(), ErrorCode::kInvalidArgument,
              "noise (", noise.size(), " samples) shorter than clean (", clean.size(), ")");
  INCSE_CHECK(std::isfinite(snr), ErrorCode::kInvalidArgument, "snr must be finite");
  const double p_clean = power(clean.samples);
  INCSE_CHECK(p_clean > 0.0, ErrorCode::kZeroPower, "zero-power operand: clean signal is silent");

  std::uniform_int_distribution<std::size_t> pick(0, noise.size() - clean.size());
  Mixture m;
  m.offset = pick(rng);
  const std::span<const double> segment(noise.samples.data() + m.offset, clean.size());
  const double p_noise = power(segment);
  INCSE_CHECK(p_noise > 0.0, ErrorCode::kZeroPower, "zero-power operand: noise segment is silent");

  m.gain = std::sqrt(p_clean / (p_noise * std::pow(10.0, snr / 10.0)));
  m.noisy.sample_rate_hz = clean.sample_rate_hz;
  m.scaled_noise.sample_rate_hz = clean.sample_rate_hz;
  m.noisy.samples.resize(clean.size());
  m.scaled_noise.samples.resize(clean.size());
  for (std::size_t i = 0; i < clean.size(); ++i) {
    m.scaled_noise.samples[i] = m.gain * segment[i];
    m.noisy.samples[i] = clean.samples[i] + m.scaled_noise.samples[i];
  }
  return m;
}

template <typename Rng>
Waveform mix_at_snr(const Waveform& clean, const Waveform& noise, double snr, Rng& rng) {
  return mix_at_snr_detailed(clean, noise, snr, rng).noisy;
}

}  // namespace incse::dsp
