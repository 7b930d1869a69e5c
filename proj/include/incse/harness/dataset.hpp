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
#include <vector>

#include "incse/continual/importance.hpp"
#include "incse/data/manifest.hpp"
#include "incse/dsp/stft.hpp"

namespace incse::harness {

using continual::MagnitudePair;

// One manifest entry loaded into the spectral domain. The noisy spectrogram
// keeps its phase for resynthesis.
struct Utterance {
  MagnitudePair pair;
  dsp::Spectrogram noisy_spec;
  data::ManifestEntry meta;
};

inline std::vector<Utterance> load_split(const data::Manifest& m, data::Split split,
                                         const dsp::StftConfig& stft = {}) {
  std::vector<Utterance> out;
  for (const auto* e : m.split(split)) {
    const dsp::Waveform clean = dsp::read_wav(m.resolve(e->clean_path));
    const dsp::Waveform noisy = dsp::read_wav(m.resolve(e->noisy_path));
    INCSE_CHECK(clean.size() == noisy.size(), ErrorCode::kValidation, "clean/noisy length mismatch for ",
                e->noisy_path.string());
    Utterance u;
    u.noisy_spec = dsp::stft(noisy, stft);
    u.pair.noisy = u.noisy_spec.magnitude;
    u.pair.clean = dsp::stft(clean, stft).magnitude;
    u.meta = *e;
    out.push_back(std::move(u));
  }
  return out;
}

inline std::vector<MagnitudePair> pairs_of(const std::vector<Utterance>& utts) {
  std::vector<MagnitudePair> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(u.pair);
  return out;
}

}  // namespace incse::harness
