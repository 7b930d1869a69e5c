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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "incse/data/manifest.hpp"
#include "incse/data/synth.hpp"
#include "incse/dsp/mix.hpp"
#include "incse/dsp/stft.hpp"

namespace {

using namespace incse;
using namespace incse::data;
namespace fs = std::filesystem;

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("incse_test_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

std::size_t peak_bin(const std::vector<double>& x) {
  const auto spec = dsp::rfft(x, static_cast<int>(x.size()));
  std::size_t best = 1;
  for (std::size_t k = 1; k < spec.size(); ++k)
    if (std::abs(spec[k]) > std::abs(spec[best])) best = k;
  return best;
}

TEST(Synth, CleanIsDeterministic) {
  EXPECT_EQ(gen_clean(42, 1.0).samples, gen_clean(42, 1.0).samples);
  EXPECT_NE(gen_clean(42, 1.0).samples, gen_clean(43, 1.0).samples);
  EXPECT_EQ(gen_clean(42, 1.0).size(), 16000u);
}

TEST(Synth, CleanSpectralPeakIsAHarmonicOfAVoicePitch) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Waveform w = gen_clean(seed, 1.0);
    const double f = static_cast<double>(peak_bin(w.samples));  // 1 Hz bins
    bool in_band = false;
    for (int k = 1; k <= 12; ++k) in_band = in_band || (f >= 90.0 * k && f <= 250.0 * k);
    EXPECT_TRUE(in_band) << "seed " << seed << " peak " << f << " Hz";
    EXPECT_NEAR(dsp::peak(w.samples), 0.5, 1e-12);
  }
}

TEST(Synth, DurationBounds) {
  EXPECT_THROW(gen_clean(1, 0.0), Error);
  EXPECT_THROW(gen_noise(1, 0.0, NoiseKind::kWhite), Error);
}

TEST(Synth, WhiteNoiseIsZeroMean) {
  double avg_abs_mean = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Waveform w = gen_noise(seed, 1.0, NoiseKind::kWhite);
    ASSERT_EQ(w.size(), 16000u);
    double mean = 0.0;
    for (double v : w.samples) mean += v;
    mean /= 16000.0;
    EXPECT_LT(std::abs(mean), 0.04);
    avg_abs_mean += std::abs(mean) / 20.0;
  }
  EXPECT_LT(avg_abs_mean, 0.01);
}

TEST(Synth, HumPeaksAtFiftyHertz) {
  EXPECT_EQ(peak_bin(gen_noise(3, 1.0, NoiseKind::kHum).samples), 50u);
}

TEST(Synth, PinkFallsOffWithFrequency) {
  const auto x = gen_noise(4, 4.0, NoiseKind::kPink).samples;
  const auto spec = dsp::rfft(x, static_cast<int>(x.size()));
  auto band = [&](double lo, double hi) {
    double e = 0.0;
    int n = 0;
    for (std::size_t k = 0; k < spec.size(); ++k) {
      const double f = 16000.0 * k / x.size();
      if (f >= lo && f < hi) {
        e += std::norm(spec[k]);
        ++n;
      }
    }
    return e / n;
  };
  // -3 dB/octave: mean power density drops ~10x over 3.3 octaves.
  const double ratio_db = 10.0 * std::log10(band(200, 400) / band(2000, 4000));
  EXPECT_NEAR(ratio_db, 10.0, 2.0);
}

TEST(Synth, EveryKindIsFiniteAndNonSilent) {
  for (const auto& [kind, name] : kNoiseKindNames) {
    if (kind == NoiseKind::kExternalWav) continue;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Waveform w = gen_noise(seed, 1.5, kind);
      for (double v : w.samples) ASSERT_TRUE(std::isfinite(v)) << name;
      EXPECT_GT(dsp::power(w.samples), 0.0) << name;
    }
  }
}

TEST(Synth, SilentClicksMakeMixingFail) {
  NoiseOptions opt;
  opt.click_rate_hz = 0.0;
  const Waveform noise = gen_noise(1, 1.5, NoiseKind::kClicks, opt);
  EXPECT_EQ(dsp::power(noise.samples), 0.0);
  std::mt19937_64 rng(1);
  try {
    dsp::mix_at_snr(gen_clean(1, 1.0), noise, 0.0, rng);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kZeroPower);
  }
}

TEST(Synth, NoiseKindNamesRoundTrip) {
  for (const auto& [kind, name] : kNoiseKindNames) EXPECT_EQ(parse_noise_kind(name), kind);
  EXPECT_THROW(parse_noise_kind("thunder"), Error);
}

TaskSpec small_spec(Split split = Split::kTrain) {
  TaskSpec s;
  s.task_id = "T1";
  s.noise_kinds = {NoiseKind::kWhite};
  s.num_utterances = 10;
  s.seed = 77;
  s.split = split;
  s.duration_s = 0.5;
  return s;
}

TEST(BuildTask, CountsDeterminismAndRoundTrip) {
  const fs::path a = scratch("a"), b = scratch("b");
  const Manifest ma = build_task(small_spec(), a);
  EXPECT_EQ(ma.entries.size(), 60u);
  const Manifest mb = build_task(small_spec(), b);
  for (std::size_t i = 0; i < ma.entries.size(); ++i) {
    ASSERT_EQ(ma.entries[i], mb.entries[i]);
    ASSERT_EQ(slurp(a / ma.entries[i].noisy_path), slurp(b / mb.entries[i].noisy_path));
  }
  EXPECT_EQ(slurp(a / "manifest.json"), slurp(b / "manifest.json"));

  const Manifest back = load_manifest(a / "manifest.json");
  EXPECT_EQ(back.entries, ma.entries);
  EXPECT_EQ(back.task_id, "T1");
  EXPECT_EQ(back.seed, 77u);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(BuildTask, MeasuredSnrMatchesManifest) {
  TaskSpec s = small_spec();
  s.noise_kinds = {NoiseKind::kWhite, NoiseKind::kClicks, NoiseKind::kCoughSurrogate, NoiseKind::kDoorSurrogate,
                   NoiseKind::kFootstepsSurrogate};
  s.num_utterances = 2;
  const fs::path dir = scratch("snr");
  const Manifest m = build_task(s, dir);
  EXPECT_EQ(m.entries.size(), 2u * 5u * 6u);
  for (const auto& e : m.entries) {
    const Waveform clean = dsp::read_wav(dir / e.clean_path);
    const Waveform noisy = dsp::read_wav(dir / e.noisy_path);
    std::vector<double> noise(clean.size());
    for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = noisy.samples[i] - clean.samples[i];
    EXPECT_NEAR(dsp::snr_db(clean.samples, noise), e.snr_db, 0.01) << e.noisy_path;
    EXPECT_LE(dsp::peak(noisy.samples), 1.0);
  }
  fs::remove_all(dir);
}

TEST(BuildTask, TestSplitDrawsOneConditionPerUtterance) {
  TaskSpec s = small_spec(Split::kTest);
  s.noise_kinds = {NoiseKind::kWhite, NoiseKind::kHum};
  s.num_utterances = 12;
  const fs::path dir = scratch("test_split");
  const Manifest m = build_task(s, dir);
  EXPECT_EQ(m.entries.size(), 12u);
  std::set<double> snrs;
  for (const auto& e : m.entries) {
    EXPECT_EQ(e.split, Split::kTest);
    snrs.insert(e.snr_db);
  }
  EXPECT_GT(snrs.size(), 1u);
  fs::remove_all(dir);
}

TEST(BuildTask, TrainAndTestSeedsAreDisjoint) {
  const TaskSpec train = small_spec(Split::kTrain), test = small_spec(Split::kTest);
  std::set<std::uint64_t> seeds;
  for (int u = 0; u < 1000; ++u) seeds.insert(manifest_detail::clean_seed(train, u));
  for (int u = 0; u < 1000; ++u) EXPECT_FALSE(seeds.contains(manifest_detail::clean_seed(test, u)));
}

TEST(LoadManifest, ErrorsAreTyped) {
  const fs::path dir = scratch("errors");
  std::ofstream(dir / "bad.json") << "{ not json";
  try {
    load_manifest(dir / "bad.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
  }

  Manifest m;
  m.task_id = "T9";
  m.entries.push_back({"clean/u0000.wav", "noisy/gone.wav", "white", 0.0, Split::kTrain});
  save_manifest(dir / "missing.json", m);
  try {
    load_manifest(dir / "missing.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kValidation);
    EXPECT_NE(std::string(e.what()).find("u0000.wav"), std::string::npos);
  }
  fs::remove_all(dir);
}

TEST(TaskSpec, ValidationRejectsBadSpecs) {
  TaskSpec s = small_spec();
  s.noise_kinds.clear();
  EXPECT_THROW(validate(s), Error);
  s = small_spec();
  s.num_utterances = 0;
  EXPECT_THROW(validate(s), Error);
  s = small_spec();
  s.noise_kinds = {NoiseKind::kExternalWav};
  EXPECT_THROW(validate(s), Error);
}

}  // namespace
