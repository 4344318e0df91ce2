// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/qinfer.hpp"

#include <string>

#include "tinyeats/errors.hpp"

namespace tinyeats {

static_assert(kMaxFanIn >= kBins + 16, "accumulator must hold the widest GRU row");

namespace {

void check_fan_in(const QuantTensor& t) {
  if (t.cols > kMaxFanIn) {
    throw Error(Errc::kOverflow, "fan-in " + std::to_string(t.cols) + " could overflow int32");
  }
}

std::int32_t dot_concat(const QuantTensor& w, std::size_t row, std::span<const Q15> a,
                        std::span<const Q15> b) {
  const std::int8_t* wr = &w.values[row * w.cols];
  std::int32_t acc = 0;
  for (std::size_t j = 0; j < a.size(); ++j) acc += std::int32_t{wr[j]} * a[j].raw;
  const std::size_t na = a.size();
  for (std::size_t j = 0; j < b.size(); ++j) acc += std::int32_t{wr[na + j]} * b[j].raw;
  return acc;
}

std::vector<Q15> step_impl(std::span<const Q15> x, std::span<const Q15> hp,
                           const QuantGruLayer& L) {
  const std::size_t n = L.hidden();
  std::vector<Q15> r(n), z(n), rh(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = shifted_softsign_q(rescale(dot_concat(L.reset, i, x, hp), L.reset.requant));
    z[i] = shifted_softsign_q(rescale(dot_concat(L.update, i, x, hp), L.update.requant));
    rh[i] = q15_mul(r[i], hp[i]);
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Q15 cand = softsign_q(rescale(dot_concat(L.candidate, i, x, rh), L.candidate.requant));
    const AccQ15 diff{std::int32_t{hp[i].raw} - cand.raw};
    const AccQ15 blend = q15_mul_wide(z[i], diff);
    h[i] = saturate_q15(std::int64_t{cand.raw} + blend.raw);
  }
  return h;
}

void check_layer(const QuantGruLayer& L, std::size_t input) {
  const std::size_t n = L.hidden();
  for (const auto* t : {&L.reset, &L.update, &L.candidate}) {
    if (t->rows != n || t->cols != input + n || t->values.size() != t->rows * t->cols) {
      throw Error(Errc::kDimensionMismatch, "quantized GRU layer shape mismatch");
    }
    check_fan_in(*t);
  }
}

}  // namespace

QFeatureWindow quantize_features(const FeatureWindow& w) {
  QFeatureWindow q;
  for (std::size_t i = 0; i < w.values.size(); ++i) q.values[i] = q15_from_real(w.values[i]);
  return q;
}

std::int32_t dot_q(const QuantTensor& w, std::size_t row, std::span<const Q15> v) {
  if (v.size() != w.cols || row >= w.rows) {
    throw Error(Errc::kDimensionMismatch, "dot_q: vector length does not match tensor");
  }
  check_fan_in(w);
  return dot_concat(w, row, v, {});
}

std::vector<Q15> qgru_step(std::span<const Q15> x, std::span<const Q15> h_prev,
                           const QuantGruLayer& layer) {
  if (h_prev.size() != layer.hidden()) {
    throw Error(Errc::kDimensionMismatch, "qgru_step: state size does not match weights");
  }
  check_layer(layer, x.size());
  return step_impl(x, h_prev, layer);
}

QTrajectory qtrajectory(const QFeatureWindow& x, const QuantModel& qm) {
  if (qm.dims.input != QFeatureWindow::kCols) {
    throw Error(Errc::kDimensionMismatch, "model input width is not 65");
  }
  check_layer(qm.gru1, qm.dims.input);
  check_layer(qm.gru2, qm.dims.hidden1);
  QTrajectory tr;
  std::vector<Q15> h1(qm.dims.hidden1), h2(qm.dims.hidden2);
  for (std::size_t t = 0; t < QFeatureWindow::kRows; ++t) {
    h1 = step_impl(x.frame(t), h1, qm.gru1);
    h2 = step_impl(h1, h2, qm.gru2);
    tr.layer1.push_back(h1);
    tr.layer2.push_back(h2);
  }
  return tr;
}

QInferResult qforward(const QFeatureWindow& x, const QuantModel& qm) {
  if (qm.fc.rows != qm.dims.fc || qm.fc.cols != qm.dims.hidden2 || qm.out.rows != kClasses ||
      qm.out.cols != qm.dims.fc) {
    throw Error(Errc::kDimensionMismatch, "quantized head shape mismatch");
  }
  check_fan_in(qm.fc);
  check_fan_in(qm.out);
  const QTrajectory tr = qtrajectory(x, qm);
  const auto& h2 = tr.layer2.back();

  std::vector<Q15> act(qm.dims.fc);
  for (std::size_t i = 0; i < qm.dims.fc; ++i) {
    act[i] = softsign_q(rescale(dot_concat(qm.fc, i, h2, {}), qm.fc.requant));
  }
  QInferResult res;
  for (std::size_t c = 0; c < kClasses; ++c) {
    res.scores[c] = rescale(dot_concat(qm.out, c, act, {}), qm.out.requant).raw;
  }
  res.label = res.scores[1] > res.scores[0] ? 1 : 0;
  return res;
}

double agreement(const FloatModel& fm, const QuantModel& qm, std::span<const FeatureWindow> windows) {
  if (windows.empty()) throw Error(Errc::kEmptySplit, "agreement: no windows");
  std::size_t same = 0;
  for (const auto& w : windows) {
    if (forward(w, fm).label() == qforward(quantize_features(w), qm).label) ++same;
  }
  return static_cast<double>(same) / static_cast<double>(windows.size());
}

}  // namespace tinyeats
