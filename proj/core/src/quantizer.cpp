// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tinyeats/errors.hpp"

namespace tinyeats {
namespace {

// rows u16, cols u16, scale f64, mult i32, shift u8
constexpr std::size_t kTensorMetaBytes = 2 + 2 + 8 + 4 + 1;

template <typename Model, typename Fn>
void for_each_qtensor(Model& m, Fn&& fn) {
  fn(m.gru1.reset);
  fn(m.gru1.update);
  fn(m.gru1.candidate);
  fn(m.gru2.reset);
  fn(m.gru2.update);
  fn(m.gru2.candidate);
  fn(m.fc);
  fn(m.out);
}

QuantGruLayer quantize_layer(const GruLayerParams& p) {
  return {quantize_tensor(p.reset), quantize_tensor(p.update), quantize_tensor(p.candidate)};
}

GruLayerParams dequantize_layer(const QuantGruLayer& q) {
  GruLayerParams p;
  p.reset = dequantize_tensor(q.reset);
  p.update = dequantize_tensor(q.update);
  p.candidate = dequantize_tensor(q.candidate);
  return p;
}

void check_shape(const QuantTensor& t, std::size_t rows, std::size_t cols, const char* name) {
  if (t.rows != rows || t.cols != cols || t.values.size() != rows * cols) {
    throw Error(Errc::kDimensionMismatch, std::string(name) + " quantized shape mismatch");
  }
}

}  // namespace

QuantTensor quantize_tensor(const Matrix& w) {
  double max_abs = 0.0;
  for (double v : w.data) {
    if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "quantize_tensor: non-finite weight");
    max_abs = std::max(max_abs, std::abs(v));
  }
  QuantTensor q;
  q.rows = w.rows;
  q.cols = w.cols;
  q.scale = max_abs == 0.0 ? 1.0 : max_abs / kQuantMax;
  q.requant = requant_from_scale(q.scale);
  q.values.resize(w.data.size());
  for (std::size_t i = 0; i < w.data.size(); ++i) {
    const double r = std::round(w.data[i] / q.scale);  // halves away from zero
    q.values[i] = static_cast<std::int8_t>(std::clamp(r, -double{kQuantMax}, double{kQuantMax}));
  }
  return q;
}

Matrix dequantize_tensor(const QuantTensor& q) {
  Matrix w(q.rows, q.cols);
  for (std::size_t i = 0; i < q.values.size(); ++i) w.data[i] = q.values[i] * q.scale;
  return w;
}

Matrix fake_quant(const Matrix& w) { return dequantize_tensor(quantize_tensor(w)); }

std::size_t quant_payload_bytes(const QuantModel& qm) {
  std::size_t total = 0;
  for_each_qtensor(qm, [&](const QuantTensor& t) { total += kTensorMetaBytes + t.values.size(); });
  return total;
}

QuantModel quantize_model(const FloatModel& m) {
  validate(m);
  QuantModel qm;
  qm.dims = m.dims;
  qm.gru1 = quantize_layer(m.gru1);
  qm.gru2 = quantize_layer(m.gru2);
  qm.fc = quantize_tensor(m.fc);
  qm.out = quantize_tensor(m.out);
  qm.norm = m.norm;
  if (const auto bytes = quant_payload_bytes(qm); bytes > kQuantBudgetBytes) {
    throw Error(Errc::kBudgetExceeded, "quantized payload " + std::to_string(bytes) +
                                           " bytes exceeds the 12288-byte budget");
  }
  return qm;
}

FloatModel dequantize_model(const QuantModel& qm) {
  FloatModel m;
  m.dims = qm.dims;
  m.gru1 = dequantize_layer(qm.gru1);
  m.gru2 = dequantize_layer(qm.gru2);
  m.fc = dequantize_tensor(qm.fc);
  m.out = dequantize_tensor(qm.out);
  m.norm = qm.norm;
  return m;
}

void validate(const QuantModel& qm) {
  const auto& d = qm.dims;
  if (d.classes != kClasses) throw Error(Errc::kDimensionMismatch, "model must have 2 classes");
  for (const auto* t : {&qm.gru1.reset, &qm.gru1.update, &qm.gru1.candidate}) {
    check_shape(*t, d.hidden1, d.input + d.hidden1, "gru1");
  }
  for (const auto* t : {&qm.gru2.reset, &qm.gru2.update, &qm.gru2.candidate}) {
    check_shape(*t, d.hidden2, d.hidden1 + d.hidden2, "gru2");
  }
  check_shape(qm.fc, d.fc, d.hidden2, "fc");
  check_shape(qm.out, d.classes, d.fc, "out");
  for_each_qtensor(qm, [](const QuantTensor& t) {
    for (auto v : t.values) {
      if (v < -kQuantMax) throw Error(Errc::kInvalidPayload, "int8 weight -128 is outside [-127, 127]");
    }
    if (!std::isfinite(t.scale) || !(t.scale > 0.0)) {
      throw Error(Errc::kInvalidPayload, "quantization scale must be positive");
    }
    if (t.requant.mult < kRequantMultMin || t.requant.shift > kRequantShiftMax) {
      throw Error(Errc::kInvalidPayload, "requant pair out of range");
    }
  });
}

}  // namespace tinyeats
