// SPDX-License-Identifier: Apache-2.0

// Floating-point reference of the soft-sign GRU classifier:
//
//   r  = (ss(W_r [x, h]) + 1) / 2
//   z  = (ss(W_z [x, h]) + 1) / 2
//   h~ = ss(W_h [x, r * h])
//   h' = h~ + z * (h - h~)            (== z*h + (1-z)*h~)
//
// with ss(x) = x / (1 + |x|). Two stacked GRU layers run over the 15 STFT
// frames from h = 0; the last state of the second layer feeds an 8-unit
// soft-sign dense layer and a 2-way linear head with softmax. No biases.

#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "tinyeats/dsp_frontend.hpp"
#include "tinyeats/matrix.hpp"

namespace tinyeats {

inline constexpr std::size_t kClasses = 2;
inline constexpr int kNonEating = 0;
inline constexpr int kEating = 1;

struct ModelDims {
  std::size_t input = 0;
  std::size_t hidden1 = 0;
  std::size_t hidden2 = 0;
  std::size_t fc = 0;
  std::size_t classes = kClasses;

  bool operator==(const ModelDims&) const = default;
};

/// The deployable architecture: 65 -> GRU16 -> GRU16 -> FC8 -> 2.
inline constexpr ModelDims kTinyEatsDims{kBins, 16, 16, 8, kClasses};

struct GruLayerParams {
  Matrix reset;      // W_r, hidden x (input + hidden)
  Matrix update;     // W_z
  Matrix candidate;  // W_h

  GruLayerParams() = default;
  GruLayerParams(std::size_t input, std::size_t hidden)
      : reset(hidden, input + hidden), update(hidden, input + hidden), candidate(hidden, input + hidden) {}

  std::size_t hidden() const { return reset.rows; }
  std::size_t input() const { return reset.cols - reset.rows; }

  bool operator==(const GruLayerParams&) const = default;
};

struct FloatModel {
  ModelDims dims;
  GruLayerParams gru1;
  GruLayerParams gru2;
  Matrix fc;   // fc x hidden2
  Matrix out;  // classes x fc
  FeatureNorm norm;

  FloatModel() = default;
  /// Zero-initialized model of the given shape.
  explicit FloatModel(const ModelDims& d);

  bool operator==(const FloatModel&) const = default;
};

/// Gradients share the model's layout.
using ModelGradient = FloatModel;

inline constexpr std::size_t kTensorCount = 8;

/// Canonical tensor order: gru1 W_r, W_z, W_h, gru2 W_r, W_z, W_h, fc, out.
/// Serialization, initialization and optimizer updates all walk this order.
template <typename Model, typename Fn>
void for_each_tensor(Model& m, Fn&& fn) {
  fn(m.gru1.reset);
  fn(m.gru1.update);
  fn(m.gru1.candidate);
  fn(m.gru2.reset);
  fn(m.gru2.update);
  fn(m.gru2.candidate);
  fn(m.fc);
  fn(m.out);
}

/// Throws Error(kDimensionMismatch / kNonFinite) if shapes disagree with
/// m.dims or any weight is not finite.
void validate(const FloatModel& m);

/// A T x width input sequence, row-major.
struct SequenceView {
  std::span<const double> data;
  std::size_t steps = 0;
  std::size_t width = 0;

  std::span<const double> step(std::size_t t) const { return data.subspan(t * width, width); }
};

inline SequenceView as_sequence(const FeatureWindow& w) {
  return {w.values, FeatureWindow::kRows, FeatureWindow::kCols};
}

double softsign(double x);
double shifted_softsign(double x);
/// d/dx softsign = 1 / (1 + |x|)^2
double softsign_grad(double x);

/// One recurrent step. Throws Error(kDimensionMismatch) on shape mismatch.
std::vector<double> gru_step(std::span<const double> x, std::span<const double> h_prev,
                             const GruLayerParams& p);

/// The state update h~ + z * (h_prev - h~), elementwise.
std::vector<double> gru_blend(std::span<const double> z, std::span<const double> h_prev,
                              std::span<const double> candidate);

struct ForwardResult {
  std::array<double, kClasses> logits{};
  std::array<double, kClasses> probs{};

  /// argmax with ties resolved to class 0.
  int label() const { return logits[1] > logits[0] ? 1 : 0; }
};

ForwardResult forward(SequenceView seq, const FloatModel& m);
inline ForwardResult forward(const FeatureWindow& w, const FloatModel& m) {
  return forward(as_sequence(w), m);
}

std::array<double, kClasses> softmax(const std::array<double, kClasses>& logits);

/// -class_weights[label] * ln(max(probs[label], 1e-12)).
double loss_weighted_ce(const std::array<double, kClasses>& probs, int label,
                        const std::array<double, kClasses>& class_weights);

struct BackwardResult {
  ModelGradient grad;
  ForwardResult forward;
  double loss = 0.0;
};

/// Exact gradient of loss_weighted_ce(forward(seq, m)) by backpropagation
/// through time. `grad` has the same layout as `m`.
BackwardResult backward(SequenceView seq, int label, const FloatModel& m,
                        const std::array<double, kClasses>& class_weights);
inline BackwardResult backward(const FeatureWindow& w, int label, const FloatModel& m,
                               const std::array<double, kClasses>& class_weights) {
  return backward(as_sequence(w), label, m, class_weights);
}

}  // namespace tinyeats
