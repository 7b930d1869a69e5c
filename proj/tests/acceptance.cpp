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

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits nonzero
// when any criterion fails.
//
//   acceptance [--work-dir DIR] [--only N ...]

#include <sys/wait.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "incse/continual/importance.hpp"
#include "incse/dsp/stft.hpp"
#include "incse/grad/check.hpp"
#include "incse/harness/report.hpp"
#include "incse/harness/sequence.hpp"
#include "incse/harness/train.hpp"
#include "incse/loss/sdr.hpp"
#include "incse/model/enhancer.hpp"

namespace fs = std::filesystem;
using namespace incse;
using grad::Matrix;
using grad::ParamVector;
using grad::Tape;
using grad::Var;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

Matrix random_pos(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

ParamVector flat(std::initializer_list<double> v) {
  grad::Layout l;
  l.add("theta", 1, static_cast<Eigen::Index>(v.size()));
  ParamVector p(l);
  std::size_t i = 0;
  for (double x : v) p[i++] = x;
  return p;
}

Outcome gradients() {
  const model::Enhancer m(model::EnhancerConfig::desk());
  const Matrix clean = random_pos(16, 257, 1);
  const Matrix noisy = clean + random_pos(16, 257, 2);
  auto plain = [&](Tape& t, const std::vector<Var>& leaves) { return loss::loss_neg_sdr(m, t, leaves, noisy, clean); };
  continual::ImportanceState s = continual::ImportanceState::initial(m.params());
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < s.anchor.size(); ++i) {
    s.anchor[i] += 0.05 * (u(rng) - 0.5);
    s.fisher_tilde.values[i] = u(rng);
    s.path_scores(static_cast<Eigen::Index>(i)) = u(rng);
  }
  s.task_index = 1;
  const continual::RegConfig cfg;
  auto reg = [&](Tape& t, const std::vector<Var>& leaves) {
    return continual::regularized_loss(m, t, leaves, noisy, clean, s, cfg);
  };
  const auto a = grad::finite_diff_check(m.params(), plain, {.num_params = 24, .seed = 11});
  const auto b = grad::finite_diff_check(m.params(), reg, {.num_params = 24, .seed = 12});
  return {a.passed && b.passed, "max rel err loss " + fmt("%.2e", a.max_rel_error) + ", regularized " +
                                    fmt("%.2e", b.max_rel_error) + " over 24 params each"};
}

Outcome parseval_round_trip() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  double worst_ratio = 0.0, worst_rt = 0.0;
  const auto window = dsp::make_window(dsp::WindowKind::kHamming, 512);
  for (int trial = 0; trial < 100; ++trial) {
    dsp::Waveform w;
    w.samples.resize(4000 + 97 * trial);
    for (double& v : w.samples) v = g(rng);
    const dsp::Spectrogram s = dsp::stft(w);
    for (Eigen::Index t = 0; t < s.frames.rows(); ++t) {
      double e_time = 0.0;
      for (int n = 0; n < 512; ++n) {
        const std::size_t idx = static_cast<std::size_t>(t) * 256 + n;
        const double x = idx < w.size() ? window[n] * w.samples[idx] : 0.0;
        e_time += x * x;
      }
      const double e_freq = dsp::two_sided_energy(s.frames.row(t), 512) / 512.0;
      worst_ratio = std::max(worst_ratio, std::abs(e_freq / e_time - 1.0));
    }
    const dsp::Waveform r = dsp::istft(s);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 512; i + 512 < r.size(); ++i) {
      err = std::max(err, std::abs(r.samples[i] - w.samples[i]));
      ref = std::max(ref, std::abs(w.samples[i]));
    }
    worst_rt = std::max(worst_rt, err / ref);
  }
  return {worst_ratio < 1e-9 && worst_rt < 1e-6,
          "energy ratio dev " + fmt("%.2e", worst_ratio) + ", round trip " + fmt("%.2e", worst_rt) + " over 100 signals"};
}

Outcome sdr_properties() {
  const Matrix x = random_pos(20, 257, 7);
  const Matrix y = x + 0.5 * random_pos(20, 257, 8);
  const double base = loss::sdr_stsa(y, x).sdr_db;
  double dev = 0.0;
  for (double c : {0.25, 0.5, 3.0, 17.0, -2.0}) dev = std::max(dev, std::abs(loss::sdr_stsa(c * y, x).sdr_db - base));
  bool clamped = loss::sdr_stsa(x, x).sdr_db == 60.0;
  Matrix ortho_x = Matrix::Zero(1, 2), ortho_y = Matrix::Zero(1, 2);
  ortho_x(0, 0) = 1.0;
  ortho_y(0, 1) = 1.0;
  clamped = clamped && loss::sdr_stsa(ortho_y, ortho_x).sdr_db == -60.0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    const double d = loss::sdr_stsa(random_pos(20, 257, 100 + s), x).sdr_db;
    clamped = clamped && d >= -60.0 && d <= 60.0;
  }
  Matrix hx(1, 2), hy(1, 2);
  hx << 1.0, 0.0;
  hy << 1.0, 1.0;
  const double hand = loss::sdr_stsa(hy, hx).sdr_db;
  return {dev < 1e-9 && clamped && hand == 0.0,
          "scale dev " + fmt("%.2e", dev) + " dB, clamp " + (clamped ? "ok" : "broken") + ", hand example " +
              fmt("%.17g", hand) + " dB"};
}

Outcome fisher_oracle() {
  struct Pair {
    double x, y;
  };
  const ParamVector theta = flat({0.8, -0.3});
  const std::vector<Pair> data{{0.5, 0.2}, {-1.5, 0.1}, {2.0, -0.4}, {0.1, 0.9}, {-0.7, -0.2}};
  const auto f = continual::estimate_fisher_diag(theta, std::span<const Pair>(data),
                                                 [](Tape&, const std::vector<Var>& p, const Pair& s) {
                                                   const Var w = grad::slice_cols(p[0], 0, 1);
                                                   const Var b = grad::slice_cols(p[0], 1, 1);
                                                   const Var h = grad::tanh(grad::add(grad::scale(w, s.x), b));
                                                   const Var e = grad::add_const(h, -s.y);
                                                   return grad::mul(e, e);
                                                 });
  Eigen::Vector2d brute = Eigen::Vector2d::Zero();
  for (const auto& s : data) {
    const double h = std::tanh(theta[0] * s.x + theta[1]);
    const Eigen::Vector2d g(2 * (h - s.y) * (1 - h * h) * s.x, 2 * (h - s.y) * (1 - h * h));
    brute += g.cwiseAbs2();
  }
  brute /= static_cast<double>(data.size());
  const double err = std::max(std::abs(f.values[0] - brute(0)), std::abs(f.values[1] - brute(1)));
  return {err < 1e-10, "max abs diff " + fmt("%.2e", err) + " (2 params, 5 samples)"};
}

Outcome path_telescoping() {
  const Eigen::Array3d a(1.0, 3.0, 0.5);
  auto loss = [&](const ParamVector& p) { return 0.5 * (a * p.values().array().square()).sum(); };
  ParamVector theta = flat({1.0, -2.0, 0.7});
  const double start = loss(theta);
  continual::PathAccumulator acc(theta);
  for (int step = 0; step < 10000; ++step) {
    ParamVector g = theta;
    g.values().array() *= a;
    const ParamVector before = theta;
    theta.values() -= 1e-4 * g.values();
    acc.accumulate(g, before, theta);
  }
  const double drop = start - loss(theta);
  const double rel = std::abs(acc.w().sum() / drop - 1.0);
  return {rel < 0.01, "sum w " + fmt("%.6f", acc.w().sum()) + " vs loss drop " + fmt("%.6f", drop) + ", rel " +
                          fmt("%.2e", rel)};
}

Outcome importance_arithmetic() {
  bool ok = true;
  std::string why;
  auto expect = [&](bool c, const char* what) {
    if (!c) {
      ok = false;
      why += std::string(why.empty() ? "" : ", ") + what;
    }
  };
  continual::RegConfig cfg;
  cfg.alpha_interp = 0.25;
  cfg.epsilon = 1e-3;
  continual::ImportanceState s = continual::ImportanceState::initial(flat({0.1}));
  continual::PathAccumulator acc(flat({0.1}));
  acc.accumulate(flat({1.0}), flat({0.1}), flat({0.0}));
  s = continual::finalize_task(s, acc, flat({0.0}), continual::FisherDiag{flat({4.0})}, cfg);
  const double first = 0.1 / ((0.0 - 0.1) * (0.0 - 0.1) + 1e-3);
  expect(s.fisher_tilde.values[0] == 4.0, "first fold");
  expect(s.path_scores(0) == first, "first path score");
  acc.accumulate(flat({-2.0}), flat({0.0}), flat({0.2}));
  s = continual::finalize_task(s, acc, flat({0.2}), continual::FisherDiag{flat({2.0})}, cfg);
  expect(s.fisher_tilde.values[0] == 3.5, "interpolation");
  expect(s.path_scores(0) == first + 0.4 / ((0.2 - 0.0) * (0.2 - 0.0) + 1e-3), "additive path scores");
  expect(s.anchor[0] == 0.2 && s.task_index == 2, "anchor");

  continual::PathAccumulator neg(flat({0.1}));
  neg.accumulate(flat({-1.0}), flat({0.1}), flat({0.0}));
  expect(continual::path_contribution(neg, flat({0.0}), 1e-3)(0) == 0.0, "negative w clamp");

  continual::ImportanceState p = continual::ImportanceState::initial(flat({0.0}));
  p.fisher_tilde.values = flat({2.0});
  p.task_index = 1;
  continual::RegConfig pc;
  pc.lambda = 1.0;
  pc.beta = 0.0;
  const double v = continual::penalty_value(flat({0.5}), p, pc);
  const double tape_v = grad::evaluate(flat({0.5}), [&](Tape& t, const std::vector<Var>& leaves) {
    return continual::penalty(t, leaves, p, pc);
  });
  expect(v == 0.5 && tape_v == 0.5, "penalty");
  return {ok, ok ? "fold 4 -> 3.5, path 9.0909 + 9.7561, clamp 0, penalty 0.5, all exact" : "mismatch: " + why};
}

harness::MagnitudePair synth_pair(std::uint64_t seed, data::NoiseKind kind) {
  const dsp::Waveform clean = data::gen_clean(seed, 0.5);
  const dsp::Waveform noise = data::gen_noise(seed + 1, 0.5, kind);
  std::mt19937_64 rng(seed);
  return {dsp::stft(dsp::mix_at_snr(clean, noise, 3.0, rng)).magnitude, dsp::stft(clean).magnitude};
}

Outcome lambda_zero() {
  std::vector<harness::MagnitudePair> d0, d1;
  for (std::uint64_t i = 0; i < 6; ++i) {
    d0.push_back(synth_pair(10 + i, data::NoiseKind::kWhite));
    d1.push_back(synth_pair(50 + i, data::NoiseKind::kHum));
  }
  const harness::Pretrained start = [&] {
    harness::TrainConfig c;
    c.epochs = 1;
    c.seed = 1;
    return harness::pretrain(model::EnhancerConfig::desk(), d0, c);
  }();
  harness::TrainConfig c;
  c.epochs = 2;
  c.seed = 2;
  c.reg.lambda = 0.0;
  model::Enhancer a = start.model, b = start.model;
  c.strategy = harness::Strategy::kFinetune;
  const auto la = harness::train_task(a, d1, c);
  c.strategy = harness::Strategy::kSeril;
  continual::PathAccumulator acc(b.params());
  const auto lb = harness::train_task(b, d1, c, &start.state, &acc);
  const bool same = la.step_loss == lb.step_loss && a.params().values() == b.params().values();
  return {same, std::to_string(la.step_loss.size()) + " steps, losses and parameters " +
                    (same ? "bitwise identical" : "differ")};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string("'") + INCSE_CLI_PATH + "' " + args + " >'" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream oss;
  oss << in.rdbuf();
  return oss.str();
}

// The shipped desk sequence, run once through the CLI and shared by 8-10.
struct DeskRun {
  bool ok = false;
  double seconds = 0.0;
  std::string error;
  harness::EvalMatrix finetune, seril;
};

const DeskRun& desk_run(const fs::path& work) {
  static DeskRun r = [&] {
    DeskRun d;
    const fs::path root = work / "desk";
    fs::remove_all(root / "runs");
    fs::create_directories(root);
    const auto t0 = std::chrono::steady_clock::now();
    const int code = run_cli(std::string("sequence -c '") + INCSE_CONFIG_DIR + "/desk.json' --data-dir '" +
                                 (root / "data").string() + "' --out-dir '" + (root / "runs").string() +
                                 "' --strategy both",
                             root.string() + ".log");
    d.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (code != 0) {
      d.error = "sequence exited " + std::to_string(code) + ", see " + root.string() + ".log";
      return d;
    }
    d.finetune = harness::load_matrix_csv(root / "runs" / "finetune" / "matrix.csv");
    d.seril = harness::load_matrix_csv(root / "runs" / "seril" / "matrix.csv");
    d.ok = d.finetune.complete() && d.seril.complete();
    if (!d.ok) d.error = "incomplete matrix";
    return d;
  }();
  return r;
}

Outcome adaptation(const fs::path& work) {
  const DeskRun& d = desk_run(work);
  if (!d.ok) return {false, d.error};
  const auto ft = harness::compute_forgetting(d.finetune);
  const auto se = harness::compute_forgetting(d.seril);
  double worst = 1e9;
  std::string gains = "gains ft";
  for (double g : ft.adaptation_gain) {
    worst = std::min(worst, g);
    gains += " " + fmt("%.2f", g);
  }
  gains += " / seril";
  for (double g : se.adaptation_gain) {
    worst = std::min(worst, g);
    gains += " " + fmt("%.2f", g);
  }
  const bool fast = d.seconds < 30 * 60;
  return {worst >= 1.0 && fast, gains + " dB, sequence " + fmt("%.0f", d.seconds) + " s"};
}

Outcome forgetting(const fs::path& work) {
  const DeskRun& d = desk_run(work);
  if (!d.ok) return {false, d.error};
  const auto ft = harness::compute_forgetting(d.finetune);
  const auto se = harness::compute_forgetting(d.seril);
  int smaller = 0;
  for (std::size_t t = 0; t < se.per_task_drop.size(); ++t) smaller += se.per_task_drop[t] < ft.per_task_drop[t];
  const bool ratio_ok = se.average_forgetting <= 0.6 * ft.average_forgetting;
  return {ratio_ok && smaller >= 3, "avg forgetting seril " + fmt("%.3f", se.average_forgetting) + " vs finetune " +
                                        fmt("%.3f", ft.average_forgetting) + " dB, smaller drop on " +
                                        std::to_string(smaller) + "/" + std::to_string(se.per_task_drop.size())};
}

Outcome retention(const fs::path& work) {
  const DeskRun& d = desk_run(work);
  if (!d.ok) return {false, d.error};
  const std::size_t last = d.seril.num_models() - 1;
  const double se = d.seril.at(last, last), ft = d.finetune.at(last, last);
  return {std::abs(se - ft) <= 1.5, "final test set seril " + fmt("%.2f", se) + " vs finetune " + fmt("%.2f", ft) + " dB"};
}

Outcome determinism(const fs::path& work) {
  std::vector<std::string> csv;
  for (const char* run : {"a", "b"}) {
    const fs::path root = work / "determinism" / run;
    fs::remove_all(root);
    fs::create_directories(root);
    const int code = run_cli(std::string("sequence -c '") + INCSE_CONFIG_DIR + "/tiny.json' --data-dir '" +
                                 (root / "data").string() + "' --out-dir '" + (root / "runs").string() +
                                 "' --strategy both",
                             root.string() + ".log");
    if (code != 0) return {false, std::string("run ") + run + " exited " + std::to_string(code)};
    csv.push_back(slurp(root / "runs" / "finetune" / "matrix.csv") + slurp(root / "runs" / "seril" / "matrix.csv"));
  }
  const bool same = csv[0] == csv[1] && !csv[0].empty();
  return {same, std::string("matrix CSVs ") + (same ? "byte-identical" : "differ") + " (" +
                    std::to_string(csv[0].size()) + " bytes)"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance gate"};
  std::string work = (fs::temp_directory_path() / "incse_acceptance").string();
  std::vector<int> only;
  app.add_option("--work-dir", work, "Scratch directory for corpora and runs");
  app.add_option("--only", only, "Run only these criteria");
  CLI11_PARSE(app, argc, argv);
  const fs::path wd = work;
  fs::create_directories(wd);

  struct Criterion {
    int id;
    const char* name;
    double budget_s;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all{
      {1, "gradient correctness", 60, gradients},
      {2, "parseval and round trip", 10, parseval_round_trip},
      {3, "sdr properties", 0, sdr_properties},
      {4, "fisher oracle", 5, fisher_oracle},
      {5, "path telescoping", 30, path_telescoping},
      {6, "importance arithmetic", 0, importance_arithmetic},
      {7, "lambda zero equivalence", 0, lambda_zero},
      {8, "adaptation gain", 0, [&] { return adaptation(wd); }},
      {9, "forgetting reduction", 0, [&] { return forgetting(wd); }},
      {10, "retention vs plasticity", 0, [&] { return retention(wd); }},
      {11, "determinism", 0, [&] { return determinism(wd); }},
  };
  int failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0 && s >= c.budget_s) {
      o.pass = false;
      o.detail += ", over the " + fmt("%.0f", c.budget_s) + " s budget";
    }
    std::printf("%s %2d %-26s %7.1fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, s, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.pass;
  }
  std::printf("%d failed\n", failures);
  return failures == 0 ? 0 : 1;
}
