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
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "incse/data/synth.hpp"
#include "incse/dsp/mix.hpp"
#include "incse/dsp/waveform.hpp"
#include "incse/error.hpp"

// Paired noisy/clean corpora described by a JSON manifest:
//
//   {
//     "format_version": 1,
//     "task_id": "T1",
//     "seed": 1234,
//     "entries": [
//       {"clean": "clean/u0000.wav", "noisy": "noisy/u0000_white_p3.wav",
//        "noise_kind": "white", "snr_db": 3.0, "split": "train"}, ...
//     ]
//   }
//
// Paths are relative to the manifest's directory.
namespace incse::data {

enum class Split { kTrain, kTest };

inline std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

inline Split parse_split(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  ::incse::detail::fail(ErrorCode::kValidation, "unknown split '", s, "'");
}

inline const std::vector<double>& default_snr_levels() {
  static const std::vector<double> levels{-3.0, 0.0, 3.0, 6.0, 9.0, 12.0};
  return levels;
}

struct TaskSpec {
  std::string task_id;
  std::vector<NoiseKind> noise_kinds;
  std::vector<double> snr_levels_db = default_snr_levels();
  int num_utterances = 1;
  std::uint64_t seed = 0;
  // Train sets cover every (utterance, kind, snr) combination; test sets
  // draw one kind and one SNR per utterance.
  Split split = Split::kTrain;
  double duration_s = 1.0;
  CleanKind clean_kind = CleanKind::kHarmonicVoice;
  std::filesystem::path clean_dir;
  std::filesystem::path noise_dir;
};

inline void validate(const TaskSpec& s) {
  INCSE_CHECK(!s.task_id.empty(), ErrorCode::kValidation, "task_id is empty");
  INCSE_CHECK(!s.noise_kinds.empty(), ErrorCode::kValidation, "task ", s.task_id, ": noise_kinds is empty");
  INCSE_CHECK(!s.snr_levels_db.empty(), ErrorCode::kValidation, "task ", s.task_id, ": snr_levels_db is empty");
  INCSE_CHECK(s.num_utterances >= 1, ErrorCode::kValidation, "task ", s.task_id, ": num_utterances must be >= 1");
  INCSE_CHECK(s.duration_s >= 0.5 && s.duration_s <= 10.0, ErrorCode::kValidation, "task ", s.task_id,
              ": duration_s must lie in [0.5, 10]");
  for (NoiseKind k : s.noise_kinds)
    INCSE_CHECK(k != NoiseKind::kExternalWav || !s.noise_dir.empty(), ErrorCode::kValidation, "task ", s.task_id,
                ": external_wav noise needs noise_dir");
  INCSE_CHECK(s.clean_kind != CleanKind::kExternalWav || !s.clean_dir.empty(), ErrorCode::kValidation, "task ",
              s.task_id, ": external_wav clean needs clean_dir");
}

struct ManifestEntry {
  std::filesystem::path clean_path;
  std::filesystem::path noisy_path;
  std::string noise_kind;
  double snr_db = 0.0;
  Split split = Split::kTrain;

  bool operator==(const ManifestEntry&) const = default;
};

struct Manifest {
  static constexpr int kFormatVersion = 1;

  std::vector<ManifestEntry> entries;
  std::string task_id;
  std::uint64_t seed = 0;
  int format_version = kFormatVersion;
  // Directory that relative entry paths resolve against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::filesystem::path& p) const { return p.is_absolute() ? p : base_dir / p; }

  std::vector<const ManifestEntry*> split(Split s) const {
    std::vector<const ManifestEntry*> out;
    for (const auto& e : entries)
      if (e.split == s) out.push_back(&e);
    return out;
  }
};

inline nlohmann::json to_json(const Manifest& m) {
  nlohmann::json j;
  j["format_version"] = m.format_version;
  j["task_id"] = m.task_id;
  j["seed"] = m.seed;
  auto& arr = j["entries"] = nlohmann::json::array();
  for (const auto& e : m.entries) {
    arr.push_back({{"clean", e.clean_path.generic_string()},
                   {"noisy", e.noisy_path.generic_string()},
                   {"noise_kind", e.noise_kind},
                   {"snr_db", e.snr_db},
                   {"split", std::string(to_string(e.split))}});
  }
  return j;
}

inline void save_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  INCSE_CHECK(out.good(), ErrorCode::kIo, "cannot write ", path.string());
  out << to_json(m).dump(2) << '\n';
  INCSE_CHECK(out.good(), ErrorCode::kIo, "write failed for ", path.string());
}

// Parses and validates a manifest: schema, version, split disjointness
// (no clean file in both splits) and existence of every referenced file.
inline Manifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  INCSE_CHECK(in.good(), ErrorCode::kIo, "cannot open manifest ", path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    ::incse::detail::fail(ErrorCode::kParse, "manifest ", path.string(), ": ", e.what());
  }
  Manifest m;
  m.base_dir = path.parent_path();
  try {
    m.format_version = j.at("format_version").get<int>();
    INCSE_CHECK(m.format_version == Manifest::kFormatVersion, ErrorCode::kValidation, "manifest ", path.string(),
                ": unsupported format_version ", m.format_version);
    m.task_id = j.at("task_id").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& e : j.at("entries")) {
      ManifestEntry entry;
      entry.clean_path = e.at("clean").get<std::string>();
      entry.noisy_path = e.at("noisy").get<std::string>();
      entry.noise_kind = e.at("noise_kind").get<std::string>();
      entry.snr_db = e.at("snr_db").get<double>();
      entry.split = parse_split(e.at("split").get<std::string>());
      m.entries.push_back(std::move(entry));
    }
  } catch (const nlohmann::json::exception& e) {
    ::incse::detail::fail(ErrorCode::kValidation, "manifest ", path.string(), ": ", e.what());
  }

  std::set<std::filesystem::path> train_clean, test_clean;
  for (const auto& e : m.entries) {
    for (const auto& p : {e.clean_path, e.noisy_path})
      INCSE_CHECK(std::filesystem::exists(m.resolve(p)), ErrorCode::kValidation, "manifest ", path.string(),
                  ": missing file ", m.resolve(p).string());
    (e.split == Split::kTrain ? train_clean : test_clean).insert(e.clean_path);
  }
  for (const auto& p : train_clean)
    INCSE_CHECK(!test_clean.contains(p), ErrorCode::kValidation, "manifest ", path.string(), ": ", p.string(),
                " appears in both splits");
  return m;
}

namespace manifest_detail {

inline std::string snr_tag(double snr) {
  std::ostringstream oss;
  oss << (snr < 0 ? 'm' : 'p') << std::fixed << std::setprecision(0) << std::abs(snr);
  if (std::abs(snr - std::round(snr)) > 1e-9) oss << "_" << std::llround(std::abs(snr) * 1000) % 1000;
  return oss.str();
}

inline std::string utt_name(int i) {
  std::ostringstream oss;
  oss << 'u' << std::setw(4) << std::setfill('0') << i;
  return oss.str();
}

// Train and test utterances draw their clean seeds from disjoint ranges.
inline std::uint64_t clean_seed(const TaskSpec& s, int utt) {
  const std::uint64_t base = s.split == Split::kTrain ? 0ull : (1ull << 48);
  return base + (s.seed % (1ull << 24)) * 1'000'000ull + static_cast<std::uint64_t>(utt);
}

}  // namespace manifest_detail

// Synthesizes a task corpus into out_dir (clean/, noisy/, manifest.json).
// Fully determined by the spec and its seed.
inline Manifest build_task(const TaskSpec& spec, const std::filesystem::path& out_dir) {
  using namespace manifest_detail;
  validate(spec);
  std::filesystem::create_directories(out_dir / "clean");
  std::filesystem::create_directories(out_dir / "noisy");

  std::optional<ExternalSource> ext_clean, ext_noise;
  if (spec.clean_kind == CleanKind::kExternalWav) ext_clean = ExternalSource::from_dir(spec.clean_dir);
  if (!spec.noise_dir.empty()) ext_noise = ExternalSource::from_dir(spec.noise_dir);

  Manifest m;
  m.task_id = spec.task_id;
  m.seed = spec.seed;
  m.base_dir = out_dir;

  for (int utt = 0; utt < spec.num_utterances; ++utt) {
    const std::uint64_t cseed = clean_seed(spec, utt);
    const dsp::Waveform clean =
        gen_clean(cseed, spec.duration_s, spec.clean_kind, ext_clean ? &*ext_clean : nullptr);

    struct Combo {
      std::size_t kind;
      std::size_t snr;
    };
    std::vector<Combo> combos;
    if (spec.split == Split::kTrain) {
      for (std::size_t k = 0; k < spec.noise_kinds.size(); ++k)
        for (std::size_t s = 0; s < spec.snr_levels_db.size(); ++s) combos.push_back({k, s});
    } else {
      std::mt19937_64 pick(derive_seed(spec.seed, static_cast<std::uint64_t>(utt), 0x7e57));
      std::uniform_int_distribution<std::size_t> kd(0, spec.noise_kinds.size() - 1);
      std::uniform_int_distribution<std::size_t> sd(0, spec.snr_levels_db.size() - 1);
      const std::size_t k = kd(pick);
      combos.push_back({k, sd(pick)});
    }

    std::vector<dsp::Waveform> noisy;
    for (const Combo& c : combos) {
      const NoiseKind kind = spec.noise_kinds[c.kind];
      const double snr = spec.snr_levels_db[c.snr];
      NoiseOptions opt;
      opt.external = ext_noise ? &*ext_noise : nullptr;
      // Sparse noises can leave a silent crop; redraw deterministically.
      for (std::uint64_t attempt = 0;; ++attempt) {
        const std::uint64_t nseed = derive_seed(cseed, c.kind * 1000 + c.snr, attempt);
        std::mt19937_64 rng(nseed);
        const dsp::Waveform noise = gen_noise(nseed, spec.duration_s + 0.5, kind, opt);
        try {
          noisy.push_back(dsp::mix_at_snr(clean, noise, snr, rng));
          break;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kZeroPower || attempt >= 16) throw;
        }
      }
    }

    // One gain per utterance keeps every file in range without changing SNR.
    double peak = dsp::peak(clean.samples);
    for (const auto& w : noisy) peak = std::max(peak, dsp::peak(w.samples));
    const double gain = peak > 0.99 ? 0.99 / peak : 1.0;

    dsp::Waveform clean_out = clean;
    for (double& v : clean_out.samples) v *= gain;
    const std::filesystem::path clean_rel = std::filesystem::path("clean") / (utt_name(utt) + ".wav");
    dsp::write_wav(out_dir / clean_rel, clean_out);

    for (std::size_t i = 0; i < combos.size(); ++i) {
      const NoiseKind kind = spec.noise_kinds[combos[i].kind];
      const double snr = spec.snr_levels_db[combos[i].snr];
      dsp::Waveform w = noisy[i];
      for (double& v : w.samples) v *= gain;
      const std::filesystem::path noisy_rel =
          std::filesystem::path("noisy") / (utt_name(utt) + "_" + std::string(to_string(kind)) + "_" + snr_tag(snr) + ".wav");
      dsp::write_wav(out_dir / noisy_rel, w);
      m.entries.push_back({clean_rel, noisy_rel, std::string(to_string(kind)), snr, spec.split});
    }
  }
  save_manifest(out_dir / "manifest.json", m);
  return m;
}

}  // namespace incse::data
