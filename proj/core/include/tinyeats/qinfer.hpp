// SPDX-License-Identifier: Apache-2.0

// Integer-only execution of the GRU classifier: int8 weights, Q15
// activations, 32-bit accumulators. Only QuantTensor::values and
// QuantTensor::requant are read; the real-valued `scale` never enters this
// path.

#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "tinyeats/dsp_frontend.hpp"
#include "tinyeats/grunet.hpp"
#include "tinyeats/qmath.hpp"
#include "tinyeats/quantizer.hpp"

namespace tinyeats {

struct QFeatureWindow {
  static constexpr std::size_t kRows = FeatureWindow::kRows;
  static constexpr std::size_t kCols = FeatureWindow::kCols;

  std::array<Q15, kRows * kCols> values{};

  std::span<const Q15> frame(std::size_t t) const {
    return std::span<const Q15>(values).subspan(t * kCols, kCols);
  }
};

QFeatureWindow quantize_features(const FeatureWindow& w);

/// Largest fan-in the engine accepts while keeping the int32 accumulator
/// exact: fan_in * 127 * 32768 < 2^31.
inline constexpr std::size_t kMaxFanIn = ((std::int64_t{1} << 31) - 1) / (127 * 32768);

/// sum_j w[row, j] * v[j] over int8 x Q15 products.
std::int32_t dot_q(const QuantTensor& w, std::size_t row, std::span<const Q15> v);

/// One integer GRU step; the state update mirrors gru_blend.
std::vector<Q15> qgru_step(std::span<const Q15> x, std::span<const Q15> h_prev,
                           const QuantGruLayer& layer);

struct QInferResult {
  int label = 0;  // argmax, ties -> 0
  std::array<std::int32_t, kClasses> scores{};  // output pre-activations, AccQ15 scale
};

/// Full network. No floating-point operation is executed.
QInferResult qforward(const QFeatureWindow& x, const QuantModel& qm);

/// Final hidden states of both GRU layers after the whole sequence; exposed
/// for cross-path fidelity checks.
struct QTrajectory {
  std::vector<std::vector<Q15>> layer1;  // per step
  std::vector<std::vector<Q15>> layer2;
};
QTrajectory qtrajectory(const QFeatureWindow& x, const QuantModel& qm);

/// Fraction of windows on which forward(fm) and qforward(qm) agree.
double agreement(const FloatModel& fm, const QuantModel& qm, std::span<const FeatureWindow> windows);

}  // namespace tinyeats
