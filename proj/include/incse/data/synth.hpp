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
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "incse/dsp/waveform.hpp"
#include "incse/error.hpp"

// Synthetic stand-ins for speech and environmental noise.
namespace incse::data {

using dsp::Waveform;

enum class CleanKind { kHarmonicVoice, kExternalWav };

enum class NoiseKind {
  kWhite,
  kPink,
  kHum,
  kClicks,
  kBabbleSurrogate,
  kCoughSurrogate,
  kDoorSurrogate,
  kFootstepsSurrogate,
  kExternalWav,
};

inline constexpr std::array<std::pair<NoiseKind, std::string_view>, 9> kNoiseKindNames{{
    {NoiseKind::kWhite, "white"},
    {NoiseKind::kPink, "pink"},
    {NoiseKind::kHum, "hum"},
    {NoiseKind::kClicks, "clicks"},
    {NoiseKind::kBabbleSurrogate, "babble_surrogate"},
    {NoiseKind::kCoughSurrogate, "cough_surrogate"},
    {NoiseKind::kDoorSurrogate, "door_surrogate"},
    {NoiseKind::kFootstepsSurrogate, "footsteps_surrogate"},
    {NoiseKind::kExternalWav, "external_wav"},
}};

inline std::string_view to_string(NoiseKind k) {
  for (const auto& [kind, name] : kNoiseKindNames)
    if (kind == k) return name;
  return "unknown";
}

inline NoiseKind parse_noise_kind(std::string_view name) {
  for (const auto& [kind, n] : kNoiseKindNames)
    if (n == name) return kind;
  ::incse::detail::fail(ErrorCode::kValidation, "unknown noise kind '", name, "'");
}

// splitmix64: decorrelates structured seeds (task, utterance, salt).
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return mix_seed(mix_seed(mix_seed(a) ^ b) ^ c);
}

// Sorted *.wav files of a directory.
inline std::vector<std::filesystem::path> list_wavs(const std::filesystem::path& dir) {
  INCSE_CHECK(std::filesystem::is_directory(dir), ErrorCode::kIo, "not a directory: ", dir.string());
  std::vector<std::filesystem::path> out;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  INCSE_CHECK(!out.empty(), ErrorCode::kIo, "no .wav files in ", dir.string());
  return out;
}

namespace synth_detail {

inline std::size_t num_samples(double duration_s) {
  return static_cast<std::size_t>(std::lround(duration_s * dsp::kSampleRateHz));
}

inline void peak_normalize(std::vector<double>& x, double target) {
  const double p = dsp::peak(x);
  if (p > 0.0)
    for (double& v : x) v *= target / p;
}

// RBJ band-pass (constant 0 dB peak gain), direct form I.
class Biquad {
 public:
  static Biquad bandpass(double center_hz, double q) {
    const double w0 = 2.0 * std::numbers::pi * center_hz / dsp::kSampleRateHz;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    Biquad f;
    f.b0_ = alpha / a0;
    f.b1_ = 0.0;
    f.b2_ = -alpha / a0;
    f.a1_ = -2.0 * std::cos(w0) / a0;
    f.a2_ = (1.0 - alpha) / a0;
    return f;
  }

  double operator()(double x) {
    const double y = b0_ * x + b1_ * x1_ + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double b0_ = 1, b1_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

// Event onsets of a Poisson process with the given rate over [0, n).
template <typename Rng>
std::vector<std::size_t> poisson_onsets(double rate_hz, std::size_t n, Rng& rng) {
  std::vector<std::size_t> onsets;
  if (rate_hz <= 0.0) return onsets;
  std::exponential_distribution<double> gap(rate_hz);
  double t = gap(rng);
  while (true) {
    const auto at = static_cast<std::size_t>(t * dsp::kSampleRateHz);
    if (at >= n) break;
    onsets.push_back(at);
    t += gap(rng);
  }
  return onsets;
}

}  // namespace synth_detail

struct ExternalSource {
  std::vector<std::filesystem::path> files;

  static ExternalSource from_dir(const std::filesystem::path& dir) { return {list_wavs(dir)}; }

  // File chosen by seed, cropped (or looped) to the requested duration.
  Waveform pick(std::uint64_t seed, double duration_s) const {
    INCSE_CHECK(!files.empty(), ErrorCode::kInvalidArgument, "external source has no files");
    Waveform src = dsp::read_wav(files[seed % files.size()]);
    INCSE_CHECK(src.sample_rate_hz == dsp::kSampleRateHz, ErrorCode::kUnsupportedFormat, "external wav ",
                files[seed % files.size()].string(), " is ", src.sample_rate_hz, " Hz, expected ", dsp::kSampleRateHz);
    INCSE_CHECK(!src.empty(), ErrorCode::kInvalidArgument, "external wav is empty");
    const std::size_t n = synth_detail::num_samples(duration_s);
    Waveform out;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.samples[i] = src.samples[i % src.size()];
    return out;
  }
};

// Harmonic voice: 5-12 harmonics of a 90-250 Hz pitch contour shaped by two
// formants and gated at a syllable rate, peak-normalized to 0.5.
inline Waveform gen_clean(std::uint64_t seed, double duration_s, CleanKind kind = CleanKind::kHarmonicVoice,
                          const ExternalSource* external = nullptr) {
  INCSE_CHECK(duration_s >= 0.5 && duration_s <= 10.0, ErrorCode::kInvalidArgument,
              "clean duration must lie in [0.5, 10] s, got ", duration_s);
  if (kind == CleanKind::kExternalWav) {
    INCSE_CHECK(external != nullptr, ErrorCode::kInvalidArgument, "external_wav clean kind needs a source directory");
    return external->pick(seed, duration_s);
  }
  std::mt19937_64 rng(mix_seed(seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = synth_detail::num_samples(duration_s);
  const double fs = dsp::kSampleRateHz;

  const double f0_base = 100.0 + 120.0 * u(rng);
  const double drift_rate = 0.5 + 1.5 * u(rng);
  const double drift_depth = 0.05 + 0.10 * u(rng);
  const double drift_phase = 2.0 * std::numbers::pi * u(rng);
  const int harmonics = 5 + static_cast<int>(u(rng) * 8.0);  // 5..12
  const double formant1 = 300.0 + 600.0 * u(rng);
  const double formant2 = 900.0 + 1500.0 * u(rng);
  const double syllable_rate = 3.0 + 3.0 * u(rng);
  const double syllable_phase = 2.0 * std::numbers::pi * u(rng);

  std::vector<double> amp(static_cast<std::size_t>(harmonics) + 1, 0.0);
  std::vector<double> phase(amp.size(), 0.0);
  for (int k = 1; k <= harmonics; ++k) phase[k] = 2.0 * std::numbers::pi * u(rng);

  Waveform w;
  w.samples.resize(n);
  double f0_phase = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / fs;
    const double f0 = std::clamp(f0_base * (1.0 + drift_depth * std::sin(2.0 * std::numbers::pi * drift_rate * t + drift_phase)),
                                 90.0, 250.0);
    f0_phase += 2.0 * std::numbers::pi * f0 / fs;
    double s = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
      const double f = k * f0;
      const double g1 = 1.0 / (1.0 + std::pow((f - formant1) / 150.0, 2.0));
      const double g2 = 0.6 / (1.0 + std::pow((f - formant2) / 250.0, 2.0));
      s += (1.0 / k + g1 + g2) * std::sin(k * f0_phase + phase[k]);
    }
    const double gate = std::max(0.0, std::sin(2.0 * std::numbers::pi * syllable_rate * t + syllable_phase));
    w.samples[i] = s * std::pow(gate, 0.6);
  }
  synth_detail::peak_normalize(w.samples, 0.5);
  return w;
}

struct NoiseOptions {
  double click_rate_hz = 4.0;
  const ExternalSource* external = nullptr;
};

inline Waveform gen_noise(std::uint64_t seed, double duration_s, NoiseKind kind, const NoiseOptions& opt = {}) {
  INCSE_CHECK(duration_s > 0.0 && duration_s <= 60.0, ErrorCode::kInvalidArgument,
              "noise duration must lie in (0, 60] s, got ", duration_s);
  using namespace synth_detail;
  std::mt19937_64 rng(mix_seed(seed ^ 0x6e6f697365ull));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = num_samples(duration_s);
  const double fs = dsp::kSampleRateHz;
  Waveform w;
  w.samples.assign(n, 0.0);
  auto& x = w.samples;

  switch (kind) {
    case NoiseKind::kWhite:
      for (auto& v : x) v = gauss(rng);
      break;
    case NoiseKind::kPink: {
      // Kellet's economy filter, -3 dB/octave.
      double b0 = 0, b1 = 0, b2 = 0;
      for (auto& v : x) {
        const double white = gauss(rng);
        b0 = 0.99765 * b0 + white * 0.0990460;
        b1 = 0.96300 * b1 + white * 0.2965164;
        b2 = 0.57000 * b2 + white * 1.0526913;
        v = b0 + b1 + b2 + white * 0.1848;
      }
      break;
    }
    case NoiseKind::kHum: {
      std::array<double, 9> ph{};
      for (auto& p : ph) p = 2.0 * std::numbers::pi * u(rng);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        double s = 0.0;
        for (int k = 1; k <= 8; ++k) s += std::sin(2.0 * std::numbers::pi * 50.0 * k * t + ph[k]) / k;
        x[i] = s;
      }
      break;
    }
    case NoiseKind::kClicks: {
      for (std::size_t onset : poisson_onsets(opt.click_rate_hz, n, rng)) {
        const double tau = (0.002 + 0.006 * u(rng)) * fs;
        const double a = 0.5 + 0.5 * u(rng);
        const auto len = static_cast<std::size_t>(6.0 * tau);
        for (std::size_t j = 0; j < len && onset + j < n; ++j) x[onset + j] += a * gauss(rng) * std::exp(-static_cast<double>(j) / tau);
      }
      break;
    }
    case NoiseKind::kBabbleSurrogate: {
      for (int v = 0; v < 6; ++v) {
        const Waveform voice = gen_clean(derive_seed(seed, 0xbabb1e, static_cast<std::uint64_t>(v)),
                                         std::clamp(duration_s, 0.5, 10.0));
        const double g = 1.0 / std::sqrt(std::max(dsp::power(voice.samples), 1e-12));
        for (std::size_t i = 0; i < n; ++i) x[i] += g * voice.samples[i % voice.size()];
      }
      break;
    }
    case NoiseKind::kCoughSurrogate: {
      // Short resonant noise bursts, sharp attack and exponential decay.
      for (std::size_t onset : poisson_onsets(1.5, n, rng)) {
        Biquad bp = Biquad::bandpass(400.0 + 1100.0 * u(rng), 1.5 + u(rng));
        const double len = (0.15 + 0.2 * u(rng)) * fs;
        const double attack = 0.01 * fs;
        const double a = 0.6 + 0.4 * u(rng);
        for (std::size_t j = 0; j < static_cast<std::size_t>(len) && onset + j < n; ++j) {
          const double env = j < attack ? j / attack : std::exp(-(j - attack) / (0.25 * len));
          x[onset + j] += a * env * bp(gauss(rng));
        }
      }
      break;
    }
    case NoiseKind::kDoorSurrogate: {
      // Hinge squeak: a gliding harmonic tone with rough amplitude.
      const double f_lo = 500.0 + 300.0 * u(rng);
      const double f_hi = f_lo * (1.3 + 0.4 * u(rng));
      const double glide_rate = 0.3 + 0.5 * u(rng);
      const double glide_phase = 2.0 * std::numbers::pi * u(rng);
      double ph = 0.0;
      double rough = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        const double f = f_lo + (f_hi - f_lo) * 0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * glide_rate * t + glide_phase));
        ph += 2.0 * std::numbers::pi * f / fs;
        rough = 0.995 * rough + 0.005 * gauss(rng);
        const double am = 1.0 + 8.0 * rough;
        x[i] = am * (std::sin(ph) + 0.5 * std::sin(2.0 * ph) + 0.3 * std::sin(3.0 * ph) + 0.2 * std::sin(4.0 * ph));
      }
      break;
    }
    case NoiseKind::kFootstepsSurrogate: {
      // Regular low thumps: damped low sinusoid plus a low-passed noise tap.
      const double step_period = (0.4 + 0.2 * u(rng)) * fs;
      double t0 = u(rng) * step_period;
      while (t0 < static_cast<double>(n)) {
        const auto onset = static_cast<std::size_t>(t0);
        const double f = 60.0 + 100.0 * u(rng);
        const double a = 0.6 + 0.4 * u(rng);
        double lp = 0.0;
        const double lp_coef = std::exp(-2.0 * std::numbers::pi * 800.0 / fs);
        for (std::size_t j = 0; j < static_cast<std::size_t>(0.15 * fs) && onset + j < n; ++j) {
          const double tj = j / fs;
          lp = lp_coef * lp + (1.0 - lp_coef) * gauss(rng);
          x[onset + j] += a * (std::exp(-tj / 0.03) * std::sin(2.0 * std::numbers::pi * f * tj) +
                               3.0 * std::exp(-tj / 0.015) * lp);
        }
        t0 += step_period * (0.9 + 0.2 * u(rng));
      }
      break;
    }
    case NoiseKind::kExternalWav:
      INCSE_CHECK(opt.external != nullptr, ErrorCode::kInvalidArgument,
                  "external_wav noise kind needs a source directory");
      return opt.external->pick(seed, duration_s);
  }
  return w;
}

}  // namespace incse::data
