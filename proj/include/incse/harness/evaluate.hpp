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
#include <span>
#include <thread>
#include <vector>

#include "incse/continual/importance.hpp"
#include "incse/dsp/stft.hpp"
#include "incse/error.hpp"
#include "incse/harness/dataset.hpp"
#include "incse/loss/sdr.hpp"
#include "incse/model/enhancer.hpp"

namespace incse::harness {

// Per-utterance SDR of the model output, computed on `workers` threads and
// returned in input order. A null model scores the unprocessed noisy input.
inline std::vector<double> score_utterances(const model::Enhancer* m, std::span<const MagnitudePair> data,
                                            int workers = 1) {
  INCSE_CHECK(!data.empty(), ErrorCode::kEmptyDataset, "evaluate: empty test split");
  std::vector<double> scores(data.size());
  auto score_one = [&](std::size_t i) {
    const auto& p = data[i];
    const grad::Matrix enhanced = m != nullptr ? m->enhance(p.noisy) : p.noisy;
    scores[i] = loss::sdr_stsa(enhanced, p.clean).sdr_db;
  };
  const auto n_workers = static_cast<std::size_t>(std::clamp(workers, 1, static_cast<int>(data.size())));
  if (n_workers == 1) {
    for (std::size_t i = 0; i < data.size(); ++i) score_one(i);
    return scores;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(n_workers);
  for (std::size_t w = 0; w < n_workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < data.size(); i += n_workers) score_one(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return scores;
}

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

// Mean SDR (dB) of the model over a test set.
inline double evaluate(const model::Enhancer& m, std::span<const MagnitudePair> data, int workers = 1) {
  return mean_of(score_utterances(&m, data, workers));
}

// Mean SDR (dB) of the noisy input itself (model bypass).
inline double evaluate_unprocessed(std::span<const MagnitudePair> data) {
  return mean_of(score_utterances(nullptr, data));
}

// Enhanced magnitude with the noisy phase, back to a waveform.
inline dsp::Waveform enhance_waveform(const model::Enhancer& m, const Utterance& u, const dsp::StftConfig& stft = {}) {
  const grad::Matrix mag = m.enhance(u.pair.noisy);
  return dsp::istft(dsp::compose(mag, u.noisy_spec), stft);
}

}  // namespace incse::harness
