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
#include <random>

#include <gtest/gtest.h>

#include "incse/grad/check.hpp"
#include "incse/grad/param.hpp"
#include "incse/grad/tape.hpp"

namespace {

using namespace incse;
using namespace incse::grad;

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

ParamVector random_params(const Layout& layout, std::uint64_t seed, double scale = 0.5) {
  ParamVector p(layout);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  for (Eigen::Index i = 0; i < p.values().size(); ++i) p.values()(i) = u(rng);
  return p;
}

TEST(Tape, SigmoidOfZero) {
  Tape t;
  EXPECT_DOUBLE_EQ(sigmoid(t.constant(scalar(0.0))).scalar(), 0.5);
}

TEST(Tape, MatvecIdentity) {
  Tape t;
  const Matrix v = (Matrix(3, 1) << 1.0, -2.0, 3.5).finished();
  const Var out = matvec(t.constant(Matrix::Identity(3, 3)), t.constant(v));
  EXPECT_EQ(out.value(), v);
}

TEST(Tape, TanhGradientAtZero) {
  Tape t;
  const Var x = t.variable(scalar(0.0));
  t.backward(sum(tanh(x)));
  EXPECT_DOUBLE_EQ(x.grad()(0, 0), 1.0);
}

TEST(Tape, ConstantLossHasZeroGradient) {
  Layout l;
  l.add("w", 2, 2);
  const ParamVector theta = random_params(l, 1);
  const auto vg = value_and_grad(theta, [](Tape& t, const std::vector<Var>&) { return t.constant(scalar(3.0)); });
  EXPECT_EQ(vg.value, 3.0);
  EXPECT_EQ(vg.grad.values().cwiseAbs().maxCoeff(), 0.0);
}

TEST(Tape, SumOfSquaresHandGradient) {
  Layout l;
  l.add("theta", 1, 2);
  ParamVector theta(l);
  theta[0] = 1.0;
  theta[1] = 2.0;
  const auto vg = value_and_grad(theta, [](Tape&, const std::vector<Var>& p) { return sum(mul(p[0], p[0])); });
  EXPECT_EQ(vg.value, 5.0);
  EXPECT_EQ(vg.grad[0], 2.0);
  EXPECT_EQ(vg.grad[1], 4.0);
}

TEST(Tape, BackwardRequiresScalarAndRunsOnce) {
  Tape t;
  const Var x = t.variable(Matrix::Ones(2, 2));
  EXPECT_THROW(t.backward(x), Error);
  Tape t2;
  const Var y = sum(t2.variable(Matrix::Ones(2, 2)));
  t2.backward(y);
  EXPECT_THROW(t2.backward(y), Error);
}

TEST(Tape, ShapeMismatchIsAnError) {
  Tape t;
  try {
    add(t.constant(Matrix::Ones(2, 2)), t.constant(Matrix::Ones(3, 2)));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
}

TEST(Tape, ClampBlocksGradientOutsideRange) {
  Tape t;
  const Var x = t.variable((Matrix(1, 3) << -2.0, 0.5, 2.0).finished());
  t.backward(sum(clamp(x, -1.0, 1.0)));
  EXPECT_EQ(x.grad()(0, 0), 0.0);
  EXPECT_EQ(x.grad()(0, 1), 1.0);
  EXPECT_EQ(x.grad()(0, 2), 0.0);
}

// Every op through one objective, checked against central differences.
TEST(FiniteDiff, AllOpsComposite) {
  Layout l;
  l.add("a", 3, 4);
  l.add("w", 5, 4);
  l.add("b", 1, 5);
  l.add("s", 1, 1);
  const ParamVector theta = random_params(l, 7);
  auto f = [](Tape& t, const std::vector<Var>& p) {
    const Var h = add_row(matmul_nt(p[0], p[1]), p[2]);           // 3x5
    const Var g = mul(sigmoid(h), tanh(scale_by(h, p[3])));        // 3x5
    const Var sp = softplus(sub(g, t.constant(Matrix::Constant(3, 5, 0.1))));
    const Var top = slice_rows(sp, 0, 2), bottom = slice_rows(sp, 2, 1);
    const Var joined = concat_rows({bottom, top});
    const Var cols = concat_cols({slice_cols(joined, 3, 2), slice_cols(joined, 0, 3)});
    const Var ratio = div(add_const(abs(cols), 0.5), add_const(mul(cols, cols), 1.0));
    const Var m = matmul(p[0], t.constant(Matrix::Ones(4, 1)));
    return add(add(sum(log(ratio)), dot(cols, joined)), sum(scale(m, 0.3)));
  };
  const auto r = finite_diff_check(theta, f, {.num_params = theta.size(), .step = 1e-6, .tol = 1e-6});
  EXPECT_TRUE(r.passed) << "max rel error " << r.max_rel_error << " at " << r.worst_index;
}

TEST(FiniteDiff, LinearModelIsExact) {
  Layout l;
  l.add("w", 1, 6);
  const ParamVector theta = random_params(l, 3);
  const Matrix x = Matrix::Random(1, 6);
  auto f = [&](Tape& t, const std::vector<Var>& p) { return dot(p[0], t.constant(x)); };
  const auto r = finite_diff_check(theta, f, {.num_params = 6, .tol = 1e-8});
  EXPECT_TRUE(r.passed) << r.max_rel_error;
}

// One LSTM-style cell step with 10 random parameters checked.
TEST(FiniteDiff, LstmCell) {
  Layout l;
  l.add("w_ih", 16, 3);
  l.add("w_hh", 16, 4);
  l.add("bias", 1, 16);
  const ParamVector theta = random_params(l, 11);
  const Matrix x = Matrix::Random(2, 3);
  auto f = [&](Tape& t, const std::vector<Var>& p) {
    Var h = t.constant(Matrix::Zero(1, 4)), c = t.constant(Matrix::Zero(1, 4));
    for (int step = 0; step < 2; ++step) {
      const Var z = add(add_row(matmul_nt(t.constant(x.row(step)), p[0]), p[2]), matmul_nt(h, p[1]));
      const Var i = sigmoid(slice_cols(z, 0, 4)), fg = sigmoid(slice_cols(z, 4, 4));
      const Var g = tanh(slice_cols(z, 8, 4)), o = sigmoid(slice_cols(z, 12, 4));
      c = add(mul(fg, c), mul(i, g));
      h = mul(o, tanh(c));
    }
    return sum(mul(h, h));
  };
  const auto r = finite_diff_check(theta, f, {.num_params = 10, .seed = 5});
  EXPECT_EQ(r.checked.size(), 10u);
  EXPECT_TRUE(r.passed) << r.max_rel_error;
  // A zero tolerance can never be met on a nonlinear model.
  EXPECT_FALSE(finite_diff_check(theta, f, {.num_params = 10, .tol = 0.0, .seed = 5}).passed);
}

TEST(Gradient, Linearity) {
  Layout l;
  l.add("w", 3, 3);
  const ParamVector theta = random_params(l, 21);
  auto l1 = [](Tape&, const std::vector<Var>& p) { return sum(tanh(p[0])); };
  auto l2 = [](Tape&, const std::vector<Var>& p) { return sum(mul(softplus(p[0]), p[0])); };
  const double a = 0.4, b = -2.5;
  auto combo = [&](Tape& t, const std::vector<Var>& p) { return add(scale(l1(t, p), a), scale(l2(t, p), b)); };
  const auto g1 = value_and_grad(theta, l1).grad, g2 = value_and_grad(theta, l2).grad;
  const auto gc = value_and_grad(theta, combo).grad;
  EXPECT_LT((gc.values() - (a * g1.values() + b * g2.values())).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Gradient, BackwardIsBitwiseDeterministic) {
  Layout l;
  l.add("w", 4, 4);
  const ParamVector theta = random_params(l, 31);
  auto f = [](Tape&, const std::vector<Var>& p) { return sum(sigmoid(matmul(p[0], p[0]))); };
  EXPECT_EQ(value_and_grad(theta, f).grad.values(), value_and_grad(theta, f).grad.values());
}

TEST(ParamVector, BlocksAreColumnMajorViews) {
  Layout l;
  l.add("a", 2, 3);
  l.add("b", 1, 2);
  EXPECT_EQ(l.total(), 8u);
  ParamVector p(l);
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = static_cast<double>(i);
  EXPECT_EQ(p.block("a")(1, 0), 1.0);
  EXPECT_EQ(p.block("a")(0, 1), 2.0);
  EXPECT_EQ(p.block("b")(0, 1), 7.0);

  // bind + gather round trip is the identity.
  Tape t;
  const auto leaves = p.bind(t);
  ParamVector q(l);
  for (std::size_t s = 0; s < leaves.size(); ++s) q.block(s) = leaves[s].value();
  EXPECT_EQ(q.values(), p.values());
}

TEST(ParamVector, LayoutMismatchIsAnError) {
  Layout a, b;
  a.add("w", 2, 2);
  b.add("w", 2, 3);
  try {
    ParamVector(a).require_same_layout(ParamVector(b), "test");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kLayoutMismatch);
  }
}

}  // namespace
