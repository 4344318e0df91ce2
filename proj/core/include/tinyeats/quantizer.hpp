// SPDX-License-Identifier: Apache-2.0

// Per-tensor symmetric int8 weight quantization.
//
//   scale  = max|w| / 127   (1 when the tensor is all zeros)
//   q      = clamp(round_half_away(w / scale), -127, 127)
//   w_hat  = q * scale
//
// -128 is never produced. Each tensor also carries the integer (mult, shift)
// pair that the inference engine uses in place of `scale`.

#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "tinyeats/grunet.hpp"
#include "tinyeats/matrix.hpp"
#include "tinyeats/qmath.hpp"

namespace tinyeats {

inline constexpr int kQuantMax = 127;
inline constexpr std::size_t kQuantBudgetBytes = 12288;

struct QuantTensor {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int8_t> values;
  double scale = 1.0;
  Requant requant;

  std::int8_t operator()(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  bool operator==(const QuantTensor&) const = default;
};

struct QuantGruLayer {
  QuantTensor reset;
  QuantTensor update;
  QuantTensor candidate;

  std::size_t hidden() const { return reset.rows; }
  std::size_t input() const { return reset.cols - reset.rows; }

  bool operator==(const QuantGruLayer&) const = default;
};

struct QuantModel {
  ModelDims dims;
  QuantGruLayer gru1;
  QuantGruLayer gru2;
  QuantTensor fc;
  QuantTensor out;
  FeatureNorm norm;

  bool operator==(const QuantModel&) const = default;
};

QuantTensor quantize_tensor(const Matrix& w);
Matrix dequantize_tensor(const QuantTensor& q);

/// Quantize-dequantize view used for quantization-aware training.
Matrix fake_quant(const Matrix& w);

/// Bytes of weight payload plus per-tensor metadata (shape, scale, mult,
/// shift) as laid out in the model container.
std::size_t quant_payload_bytes(const QuantModel& qm);

/// Quantizes every tensor independently. Throws Error(kBudgetExceeded) if the
/// payload would not fit the 12 KB deployment budget.
QuantModel quantize_model(const FloatModel& m);

/// Float model whose weights are the dequantized int8 values.
FloatModel dequantize_model(const QuantModel& qm);

/// Checks shapes, int8 range, scale positivity and requant consistency.
void validate(const QuantModel& qm);

}  // namespace tinyeats
