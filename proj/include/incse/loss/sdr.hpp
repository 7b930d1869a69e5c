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
#include <numbers>
#include <vector>

#include "incse/error.hpp"
#include "incse/grad/tape.hpp"
#include "incse/model/enhancer.hpp"

// Spectral-amplitude SDR. With X the clean and Xh the enhanced magnitudes
// (flattened over all frames and bins),
//
//   alpha = <X, Xh> / |X|^2
//   sdr   = 10 log10((|alpha X|^2 + eps) / (|alpha X - Xh|^2 + eps))
//
// clamped to [-kSdrClampDb, kSdrClampDb].
namespace incse::loss {

using grad::Matrix;
using grad::Tape;
using grad::Var;

inline constexpr double kSdrEps = 1e-8;
inline constexpr double kSdrClampDb = 60.0;

struct SdrResult {
  double alpha_scale = 0.0;
  double signal_energy = 0.0;
  double residual_energy = 0.0;
  double sdr_db = 0.0;
};

namespace detail {

inline void check_pair(const Matrix& enhanced, const Matrix& clean) {
  INCSE_CHECK(enhanced.rows() == clean.rows() && enhanced.cols() == clean.cols(), ErrorCode::kShapeMismatch,
              "enhanced ", enhanced.rows(), "x", enhanced.cols(), " vs clean ", clean.rows(), "x", clean.cols());
  INCSE_CHECK(clean.squaredNorm() > 0.0, ErrorCode::kUndefinedReference,
              "undefined reference: clean magnitudes are all zero");
}

}  // namespace detail

inline SdrResult sdr_stsa(const Matrix& enhanced, const Matrix& clean) {
  detail::check_pair(enhanced, clean);
  const double clean_energy = clean.squaredNorm();
  SdrResult r;
  r.alpha_scale = clean.cwiseProduct(enhanced).sum() / clean_energy;
  r.signal_energy = r.alpha_scale * r.alpha_scale * clean_energy;
  r.residual_energy = (clean * r.alpha_scale - enhanced).squaredNorm();
  const double db = 10.0 * std::log10((r.signal_energy + kSdrEps) / (r.residual_energy + kSdrEps));
  r.sdr_db = std::clamp(db, -kSdrClampDb, kSdrClampDb);
  return r;
}

// -SDR recorded on the tape. Outside the clamp the gradient is zero.
inline Var neg_sdr(const Var& enhanced, const Matrix& clean) {
  detail::check_pair(enhanced.value(), clean);
  Tape& tape = *enhanced.tape();
  const double clean_energy = clean.squaredNorm();
  const Var x = tape.constant(clean);
  const Var alpha = grad::scale(grad::dot(enhanced, x), 1.0 / clean_energy);
  const Var signal = grad::scale(grad::mul(alpha, alpha), clean_energy);
  const Var resid = grad::sub(grad::scale_by(x, alpha), enhanced);
  const Var residual = grad::dot(resid, resid);
  const Var ratio = grad::div(grad::add_const(signal, kSdrEps), grad::add_const(residual, kSdrEps));
  const Var db = grad::scale(grad::log(ratio), 10.0 / std::numbers::ln10);
  return grad::scale(grad::clamp(db, -kSdrClampDb, kSdrClampDb), -1.0);
}

inline Var l1(const Var& enhanced, const Matrix& clean) {
  INCSE_CHECK(enhanced.rows() == clean.rows() && enhanced.cols() == clean.cols(), ErrorCode::kShapeMismatch,
              "l1: shape mismatch");
  const Var diff = grad::sub(enhanced, enhanced.tape()->constant(clean));
  return grad::scale(grad::sum(grad::abs(diff)), 1.0 / static_cast<double>(clean.size()));
}

inline Var l2(const Var& enhanced, const Matrix& clean) {
  INCSE_CHECK(enhanced.rows() == clean.rows() && enhanced.cols() == clean.cols(), ErrorCode::kShapeMismatch,
              "l2: shape mismatch");
  const Var diff = grad::sub(enhanced, enhanced.tape()->constant(clean));
  return grad::scale(grad::dot(diff, diff), 1.0 / static_cast<double>(clean.size()));
}

enum class LossKind { kNegSdr, kL1, kL2 };

// l_theta(Y) for one utterance pair: model forward followed by the loss.
inline Var utterance_loss(const model::Enhancer& m, Tape& tape, const std::vector<Var>& leaves, const Matrix& noisy,
                          const Matrix& clean, LossKind kind = LossKind::kNegSdr) {
  INCSE_CHECK(noisy.rows() == clean.rows() && noisy.cols() == clean.cols(), ErrorCode::kShapeMismatch,
              "noisy ", noisy.rows(), "x", noisy.cols(), " not aligned with clean ", clean.rows(), "x", clean.cols());
  const Var enhanced = m.forward(tape, leaves, noisy);
  switch (kind) {
    case LossKind::kL1: return l1(enhanced, clean);
    case LossKind::kL2: return l2(enhanced, clean);
    case LossKind::kNegSdr: break;
  }
  return neg_sdr(enhanced, clean);
}

inline Var loss_neg_sdr(const model::Enhancer& m, Tape& tape, const std::vector<Var>& leaves, const Matrix& noisy,
                        const Matrix& clean) {
  return utterance_loss(m, tape, leaves, noisy, clean, LossKind::kNegSdr);
}

}  // namespace incse::loss
