// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "tinyeats/errors.hpp"
#include "tinyeats/grunet.hpp"

namespace tinyeats {
namespace {

constexpr ModelDims kSmall{6, 4, 4, 3, 2};

GruLayerParams scalar_layer(double rx, double rh, double zx, double zh, double hx, double hh) {
  GruLayerParams p(1, 1);
  p.reset.data = {rx, rh};
  p.update.data = {zx, zh};
  p.candidate.data = {hx, hh};
  return p;
}

TEST(Softsign, Examples) {
  EXPECT_EQ(softsign(0.0), 0.0);
  EXPECT_EQ(shifted_softsign(0.0), 0.5);
  EXPECT_EQ(softsign(1.0), 0.5);
  EXPECT_EQ(softsign(-3.0), -0.75);
  EXPECT_EQ(softsign_grad(1.0), 0.25);
  EXPECT_EQ(softsign_grad(-3.0), 1.0 / 16.0);
}

TEST(GruStep, ZeroWeightsHalveState) {
  const GruLayerParams p(3, 4);
  const std::vector<double> x{0.3, -0.7, 0.9};
  const std::vector<double> h{0.8, -0.4, 0.0, 0.2};
  const auto out = gru_step(x, h, p);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_EQ(out[i], 0.5 * h[i]);
  for (double v : gru_step(x, std::vector<double>(4, 0.0), p)) EXPECT_EQ(v, 0.0);
}

TEST(GruStep, ScalarCase) {
  const auto out = gru_step(std::vector<double>{1.0}, std::vector<double>{0.0},
                            scalar_layer(1, 0, 1, 0, 1, 0));
  EXPECT_DOUBLE_EQ(out[0], 0.125);
}

TEST(GruStep, MatchesScalarOracle) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 1000; ++i) {
    const double w[6] = {u(gen), u(gen), u(gen), u(gen), u(gen), u(gen)};
    const double x = u(gen), h = u(gen) / 2;
    const auto out = gru_step(std::vector<double>{x}, std::vector<double>{h},
                              scalar_layer(w[0], w[1], w[2], w[3], w[4], w[5]));
    EXPECT_NEAR(out[0], oracle::scalar_gru_step(x, h, w[0], w[1], w[2], w[3], w[4], w[5]), 1e-15);
  }
}

TEST(GruStep, DimensionMismatch) {
  const GruLayerParams p(3, 4);
  try {
    gru_step(std::vector<double>(2), std::vector<double>(4), p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::kDimensionMismatch);
  }
  EXPECT_THROW(gru_step(std::vector<double>(3), std::vector<double>(5), p), Error);
}

TEST(GruStep, StateStaysInOpenUnitInterval) {
  const auto m = oracle::random_model(kTinyEatsDims, 5, 4.0);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto seq = oracle::random_sequence(15, 65, 100 + s);
    std::vector<double> h(16, 0.0);
    for (std::size_t t = 0; t < 15; ++t) {
      h = gru_step(std::span(seq).subspan(t * 65, 65), h, m.gru1);
      for (double v : h) {
        EXPECT_GT(v, -1.0);
        EXPECT_LT(v, 1.0);
      }
    }
  }
}

TEST(GruBlend, UpdateGateOneHoldsState) {
  const std::vector<double> h{0.1, -0.9, 0.5};
  const std::vector<double> cand{0.7, 0.2, -0.3};
  const auto held = gru_blend(std::vector<double>(3, 1.0), h, cand);
  for (std::size_t i = 0; i < h.size(); ++i) EXPECT_NEAR(held[i], h[i], 1e-15);
  EXPECT_EQ(gru_blend(std::vector<double>(3, 0.0), h, cand), cand);
}

TEST(Forward, ZeroModel) {
  const FloatModel m(kTinyEatsDims);
  FeatureWindow w;
  w.values.fill(0.4);
  const auto r = forward(w, m);
  EXPECT_EQ(r.logits[0], 0.0);
  EXPECT_EQ(r.logits[1], 0.0);
  EXPECT_EQ(r.probs[0], 0.5);
  EXPECT_EQ(r.probs[1], 0.5);
  EXPECT_EQ(r.label(), kNonEating);
}

TEST(Forward, ProbabilitiesFormDistribution) {
  for (std::uint64_t s = 0; s < 1000; ++s) {
    const auto m = oracle::random_model(kSmall, s, 3.0);
    const auto seq = oracle::random_sequence(5, 6, s + 7);
    const auto r = forward(SequenceView{seq, 5, 6}, m);
    EXPECT_GT(r.probs[0], 0.0);
    EXPECT_GT(r.probs[1], 0.0);
    EXPECT_NEAR(r.probs[0] + r.probs[1], 1.0, 1e-12);
    EXPECT_EQ(r.label(), r.probs[1] > r.probs[0] ? 1 : 0);
  }
}

TEST(Forward, DeterministicAndStateless) {
  const auto m = oracle::random_model(kTinyEatsDims, 9);
  const auto a = oracle::random_sequence(15, 65, 1);
  const auto b = oracle::random_sequence(15, 65, 2);
  const auto first = forward(SequenceView{a, 15, 65}, m);
  forward(SequenceView{b, 15, 65}, m);
  const auto again = forward(SequenceView{a, 15, 65}, m);
  EXPECT_EQ(first.logits, again.logits);
}

TEST(Softmax, TieGoesToNonEating) {
  ForwardResult r;
  r.logits = {1.5, 1.5};
  r.probs = softmax(r.logits);
  EXPECT_EQ(r.label(), 0);
  const auto p = softmax({1000.0, -1000.0});
  EXPECT_EQ(p[0], 1.0);
  EXPECT_TRUE(std::isfinite(p[1]));
}

TEST(Loss, Examples) {
  EXPECT_NEAR(loss_weighted_ce({0.5, 0.5}, 1, {1, 1}), 0.693147180559945, 1e-12);
  EXPECT_NEAR(loss_weighted_ce({0.5, 0.5}, 1, {1, 2}), 1.386294361119891, 1e-12);
  EXPECT_EQ(loss_weighted_ce({0.0, 1.0}, 1, {1, 1}), 0.0);
  EXPECT_NEAR(loss_weighted_ce({1.0, 0.0}, 1, {1, 1}), -std::log(1e-12), 1e-9);
  EXPECT_THROW(loss_weighted_ce({0.5, 0.5}, 2, {1, 1}), Error);
}

TEST(Backward, ZeroModelLogitGradient) {
  const auto seq = oracle::random_sequence(3, 6, 1);
  const auto r = backward(SequenceView{seq, 3, 6}, 0, FloatModel(kSmall), {1, 1});
  EXPECT_EQ(r.forward.probs[0], 0.5);
  EXPECT_NEAR(r.loss, std::log(2.0), 1e-15);
  for_each_tensor(r.grad, [](const Matrix& g) {
    for (double v : g.data) EXPECT_EQ(v, 0.0);
  });

  // With a zero head the out-gradient is (probs - onehot) x fc activation,
  // so its rows are (-0.5 a, +0.5 a).
  auto m = oracle::random_model(kSmall, 2);
  m.out.data.assign(m.out.data.size(), 0.0);
  const auto r2 = backward(SequenceView{seq, 3, 6}, 0, m, {1, 1});
  bool any_nonzero = false;
  for (std::size_t j = 0; j < m.out.cols; ++j) {
    EXPECT_DOUBLE_EQ(r2.grad.out(0, j), -r2.grad.out(1, j));
    EXPECT_LT(std::abs(r2.grad.out(1, j)), 0.5);
    any_nonzero = any_nonzero || r2.grad.out(1, j) != 0.0;
  }
  EXPECT_TRUE(any_nonzero);
}

TEST(Backward, MatchesFiniteDifferences) {
  constexpr double kEps = 1e-5;
  for (std::uint64_t s = 0; s < 3; ++s) {
    const auto m = oracle::random_model(kSmall, 40 + s, 2.0);
    const auto seq = oracle::random_sequence(3, 6, 80 + s);
    const SequenceView view{seq, 3, 6};
    const std::array<double, 2> w{0.8, 1.3};
    const int label = static_cast<int>(s % 2);
    const auto analytic = backward(view, label, m, w);
    EXPECT_NEAR(analytic.loss, oracle::model_loss(view, label, m, w), 1e-14);

    std::vector<const Matrix*> grads;
    for_each_tensor(analytic.grad, [&](const Matrix& g) { grads.push_back(&g); });
    FloatModel probe = m;
    std::size_t tensor = 0;
    for_each_tensor(probe, [&](Matrix& t) {
      for (std::size_t i = 0; i < t.data.size(); ++i) {
        const double saved = t.data[i];
        t.data[i] = saved + kEps;
        const double up = oracle::model_loss(view, label, probe, w);
        t.data[i] = saved - kEps;
        const double down = oracle::model_loss(view, label, probe, w);
        t.data[i] = saved;
        const double numeric = (up - down) / (2 * kEps);
        const double a = grads[tensor]->data[i];
        const double denom = std::max({std::abs(a), std::abs(numeric), 1e-7});
        EXPECT_LE(std::abs(a - numeric) / denom, 1e-4)
            << "tensor " << tensor << " entry " << i << " analytic " << a << " numeric " << numeric;
      }
      ++tensor;
    });
  }
}

TEST(Backward, GradientsFiniteOnFullModel) {
  const auto m = oracle::random_model(kTinyEatsDims, 11);
  const auto seq = oracle::random_sequence(15, 65, 12);
  const auto r = backward(SequenceView{seq, 15, 65}, 1, m, {1, 1});
  for_each_tensor(r.grad, [](const Matrix& g) {
    for (double v : g.data) EXPECT_TRUE(std::isfinite(v));
  });
}

TEST(Validate, RejectsBadModels) {
  FloatModel m(kTinyEatsDims);
  EXPECT_NO_THROW(validate(m));
  m.fc.data[3] = std::nan("");
  EXPECT_THROW(validate(m), Error);
  FloatModel n(kTinyEatsDims);
  n.dims.fc = 9;
  EXPECT_THROW(validate(n), Error);
}

}  // namespace
}  // namespace tinyeats
