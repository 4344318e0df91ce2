// SPDX-License-Identifier: Apache-2.0

// Class-weighted mini-batch SGD with momentum, best-epoch checkpointing,
// optional quantization-aware training, and confusion-count metrics.

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <span>
#include <vector>

#include "tinyeats/dsp_frontend.hpp"
#include "tinyeats/grunet.hpp"

namespace tinyeats {

struct LabeledExample {
  FeatureWindow features;
  int label = 0;  // 0 = non-eating, 1 = eating
  std::string source;
};

struct DatasetSplits {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> validation;
  std::vector<LabeledExample> test;
};

inline constexpr std::size_t kFloatEpochs = 100;
inline constexpr std::size_t kQatEpochs = 200;

struct TrainConfig {
  double learning_rate = 0.01;
  double momentum = 0.9;
  std::size_t batch_size = 32;
  std::size_t epochs = kFloatEpochs;
  std::uint64_t seed = 0;
  bool qat = false;

  /// Throws Error(kInvalidArgument) when a field is out of range.
  void validate() const;
};

/// w_c = N / (2 * N_c). Throws Error(kClassAbsent) if a class has no samples.
std::array<double, kClasses> class_weights(std::size_t n_noneating, std::size_t n_eating);
std::array<double, kClasses> class_weights(std::span<const LabeledExample> train);

/// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) for every weight, drawn in
/// canonical tensor order from xorshift64* seeded with `seed`.
FloatModel init_model(std::uint64_t seed, const ModelDims& dims = kTinyEatsDims);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  FloatModel model;                  // retained (best) checkpoint
  std::size_t best_epoch = 0;        // 1-based index into history
  std::vector<EpochRecord> history;  // one row per epoch
};

/// Maps latent weights to the weights used in the forward pass. Gradients
/// are applied to the latent weights unchanged (straight-through).
using WeightTransform = std::function<FloatModel(const FloatModel&)>;

/// The shared loop behind train/train_qat.
TrainResult train_with_transform(const DatasetSplits& splits, const TrainConfig& config,
                                 const WeightTransform& transform);

/// Dispatches on config.qat: plain training, or QAT with fake_quant applied
/// to every tensor. Throws Error(kEmptySplit) for an empty train/validation
/// split and Error(kNonFiniteLoss) if the loss diverges.
TrainResult train(const DatasetSplits& splits, const TrainConfig& config);
TrainResult train_qat(const DatasetSplits& splits, TrainConfig config);

/// Every tensor replaced by fake_quant(tensor).
FloatModel fake_quant_model(const FloatModel& m);

/// Zero-based index of the retained epoch: highest validation accuracy, then
/// lowest validation loss, then earliest.
std::size_t select_checkpoint(std::span<const EpochRecord> history);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  void add(int truth, int predicted);

  bool operator==(const ConfusionCounts&) const = default;
};

struct Metrics {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool precision_undefined = false;  // TP + FP == 0
  bool recall_undefined = false;     // TP + FN == 0
};

Metrics compute_metrics(const ConfusionCounts& c);

/// Harmonic mean; 0 when both are 0.
double f1_score(double precision, double recall);

struct Evaluation {
  ConfusionCounts counts;
  Metrics metrics;
};

using Classifier = std::function<int(const FeatureWindow&)>;

/// Per-window prediction against labels. Throws Error(kEmptySplit) if empty.
Evaluation evaluate(const Classifier& classify, std::span<const LabeledExample> split);
Evaluation evaluate(const FloatModel& m, std::span<const LabeledExample> split);

}  // namespace tinyeats
