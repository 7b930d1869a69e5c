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

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "incse/dsp/waveform.hpp"
#include "incse/error.hpp"

namespace incse::dsp {

using Matrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;

enum class WindowKind { kHamming };

struct StftConfig {
  int fft_size = 512;
  double window_ms = 32.0;
  double hop_ms = 16.0;
  WindowKind window_kind = WindowKind::kHamming;

  int window_len(int sample_rate_hz = kSampleRateHz) const {
    return static_cast<int>(std::lround(window_ms * sample_rate_hz / 1000.0));
  }
  int hop(int sample_rate_hz = kSampleRateHz) const {
    return static_cast<int>(std::lround(hop_ms * sample_rate_hz / 1000.0));
  }
  int num_bins() const { return fft_size / 2 + 1; }
};

inline void validate(const StftConfig& cfg, int sample_rate_hz = kSampleRateHz) {
  INCSE_CHECK(sample_rate_hz == kSampleRateHz, ErrorCode::kInvalidArgument,
              "unsupported sample rate ", sample_rate_hz, " Hz (only ", kSampleRateHz, " Hz)");
  INCSE_CHECK(cfg.fft_size > 0 && (cfg.fft_size & (cfg.fft_size - 1)) == 0, ErrorCode::kInvalidArgument,
              "fft_size must be a power of two, got ", cfg.fft_size);
  const int win = cfg.window_len(sample_rate_hz);
  const int hop = cfg.hop(sample_rate_hz);
  INCSE_CHECK(hop > 0 && hop <= win && win <= cfg.fft_size, ErrorCode::kInvalidArgument,
              "need 0 < hop (", hop, ") <= window (", win, ") <= fft_size (", cfg.fft_size, ")");
}

// Periodic window of length n.
inline std::vector<double> make_window(WindowKind kind, int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  switch (kind) {
    case WindowKind::kHamming:
      for (int i = 0; i < n; ++i) w[i] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * i / n);
      break;
  }
  return w;
}

// T x F complex frames with magnitude and phase views. The noisy phase is
// carried alongside so an enhanced magnitude can be resynthesized.
struct Spectrogram {
  ComplexMatrix frames;
  Matrix magnitude;
  Matrix phase;
  int fft_size = 512;
  int hop = 256;
  int window_len = 512;

  Eigen::Index num_frames() const { return frames.rows(); }
  Eigen::Index num_bins() const { return frames.cols(); }
};

namespace fft_detail {

// FFTW planning is not thread-safe; plans are cached per size behind a mutex
// and executed through the new-array interface, which is.
struct Plans {
  fftw_plan forward = nullptr;
  fftw_plan inverse = nullptr;
};

inline Plans& plans_for(int n) {
  static std::mutex mu;
  static std::map<int, Plans> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  double* real = fftw_alloc_real(static_cast<std::size_t>(n));
  fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
  Plans p;
  p.forward = fftw_plan_dft_r2c_1d(n, real, spec, FFTW_ESTIMATE);
  p.inverse = fftw_plan_dft_c2r_1d(n, spec, real, FFTW_ESTIMATE);
  fftw_free(real);
  fftw_free(spec);
  return cache.emplace(n, p).first->second;
}

struct Buffers {
  explicit Buffers(int n)
      : real(fftw_alloc_real(static_cast<std::size_t>(n))),
        spec(fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1))) {}
  ~Buffers() {
    fftw_free(real);
    fftw_free(spec);
  }
  Buffers(const Buffers&) = delete;
  Buffers& operator=(const Buffers&) = delete;
  double* real;
  fftw_complex* spec;
};

}  // namespace fft_detail

// One-sided DFT of a real sequence (zero-padded to n).
inline std::vector<std::complex<double>> rfft(std::span<const double> x, int n) {
  fft_detail::Buffers buf(n);
  for (int i = 0; i < n; ++i) buf.real[i] = i < static_cast<int>(x.size()) ? x[i] : 0.0;
  fftw_execute_dft_r2c(fft_detail::plans_for(n).forward, buf.real, buf.spec);
  std::vector<std::complex<double>> out(static_cast<std::size_t>(n / 2 + 1));
  for (int k = 0; k <= n / 2; ++k) out[k] = {buf.spec[k][0], buf.spec[k][1]};
  return out;
}

inline Spectrogram stft(const Waveform& w, const StftConfig& cfg = {}) {
  validate(cfg, w.sample_rate_hz);
  validate(w);
  const int win = cfg.window_len(w.sample_rate_hz);
  const int hop = cfg.hop(w.sample_rate_hz);
  const int n = cfg.fft_size;
  const int bins = cfg.num_bins();
  INCSE_CHECK(static_cast<int>(w.size()) >= win, ErrorCode::kInputTooShort,
              "input too short: ", w.size(), " samples < window ", win);
  const int frames = 1 + (static_cast<int>(w.size()) - win) / hop;
  const auto window = make_window(cfg.window_kind, win);

  Spectrogram s;
  s.fft_size = n;
  s.hop = hop;
  s.window_len = win;
  s.frames.resize(frames, bins);
  s.magnitude.resize(frames, bins);
  s.phase.resize(frames, bins);

  fft_detail::Buffers buf(n);
  const fftw_plan plan = fft_detail::plans_for(n).forward;
  for (int t = 0; t < frames; ++t) {
    const double* seg = w.samples.data() + static_cast<std::ptrdiff_t>(t) * hop;
    for (int i = 0; i < n; ++i) buf.real[i] = i < win ? seg[i] * window[i] : 0.0;
    fftw_execute_dft_r2c(plan, buf.real, buf.spec);
    for (int k = 0; k < bins; ++k) {
      const std::complex<double> c(buf.spec[k][0], buf.spec[k][1]);
      s.frames(t, k) = c;
      s.magnitude(t, k) = std::abs(c);
      s.phase(t, k) = std::arg(c);
    }
  }
  return s;
}

// Builds complex frames from a magnitude and a phase matrix (typically the
// enhanced magnitude and the noisy phase).
inline Spectrogram compose(const Matrix& magnitude, const Spectrogram& phase_source) {
  INCSE_CHECK(magnitude.rows() == phase_source.phase.rows() && magnitude.cols() == phase_source.phase.cols(),
              ErrorCode::kShapeMismatch, "magnitude ", magnitude.rows(), "x", magnitude.cols(),
              " does not match phase ", phase_source.phase.rows(), "x", phase_source.phase.cols());
  Spectrogram s = phase_source;
  s.magnitude = magnitude;
  for (Eigen::Index t = 0; t < magnitude.rows(); ++t)
    for (Eigen::Index k = 0; k < magnitude.cols(); ++k)
      s.frames(t, k) = std::polar(magnitude(t, k), phase_source.phase(t, k));
  return s;
}

// Weighted overlap-add of already time-domain frames (rows of `frames`, each
// window.size() long), normalized per sample by the summed squared window.
inline std::vector<double> overlap_add(const Matrix& frames, std::span<const double> window, int hop) {
  const auto win = static_cast<Eigen::Index>(window.size());
  INCSE_CHECK(frames.cols() >= win, ErrorCode::kShapeMismatch, "frame length ", frames.cols(), " < window ", win);
  const Eigen::Index len = frames.rows() == 0 ? 0 : (frames.rows() - 1) * hop + win;
  std::vector<double> out(static_cast<std::size_t>(len), 0.0);
  std::vector<double> norm(static_cast<std::size_t>(len), 0.0);
  for (Eigen::Index t = 0; t < frames.rows(); ++t) {
    const Eigen::Index base = t * hop;
    for (Eigen::Index i = 0; i < win; ++i) {
      out[base + i] += window[i] * frames(t, i);
      norm[base + i] += window[i] * window[i];
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    INCSE_CHECK(norm[i] >= 1e-8, ErrorCode::kColaViolation, "COLA violation: window sum ", norm[i], " at sample ", i);
    out[i] /= norm[i];
  }
  return out;
}

inline Waveform istft(const Spectrogram& s, const StftConfig& cfg = {}) {
  validate(cfg);
  const int n = cfg.fft_size;
  const int win = cfg.window_len();
  const int hop = cfg.hop();
  INCSE_CHECK(s.num_bins() == cfg.num_bins() && s.hop == hop && s.window_len == win && s.fft_size == n,
              ErrorCode::kShapeMismatch, "spectrogram geometry (bins ", s.num_bins(), ", hop ", s.hop,
              ", window ", s.window_len, ") inconsistent with config");
  const auto window = make_window(cfg.window_kind, win);

  Matrix time_frames(s.num_frames(), win);
  fft_detail::Buffers buf(n);
  const fftw_plan plan = fft_detail::plans_for(n).inverse;
  for (Eigen::Index t = 0; t < s.num_frames(); ++t) {
    for (int k = 0; k <= n / 2; ++k) {
      buf.spec[k][0] = s.frames(t, k).real();
      buf.spec[k][1] = s.frames(t, k).imag();
    }
    // c2r treats DC and Nyquist as real.
    buf.spec[0][1] = 0.0;
    buf.spec[n / 2][1] = 0.0;
    fftw_execute_dft_c2r(plan, buf.spec, buf.real);
    for (int i = 0; i < win; ++i) time_frames(t, i) = buf.real[i] / n;
  }
  Waveform w;
  w.samples = overlap_add(time_frames, window, hop);
  return w;
}

// Energy of one frame counted over the full two-sided spectrum.
inline double two_sided_energy(const Eigen::Ref<const Eigen::RowVectorXcd>& onesided, int fft_size) {
  double e = std::norm(onesided(0)) + std::norm(onesided(fft_size / 2));
  for (int k = 1; k < fft_size / 2; ++k) e += 2.0 * std::norm(onesided(k));
  return e;
}

}  // namespace incse::dsp
