// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "tinyeats/errors.hpp"
#include "tinyeats/quantizer.hpp"
#include "tinyeats/rng.hpp"

namespace tinyeats {
namespace {

std::vector<Matrix*> tensors_of(FloatModel& m) {
  std::vector<Matrix*> out;
  for_each_tensor(m, [&](Matrix& t) { out.push_back(&t); });
  return out;
}

// dst += alpha * src, tensor by tensor.
void axpy(FloatModel& dst, double alpha, FloatModel& src) {
  auto d = tensors_of(dst);
  auto s = tensors_of(src);
  for (std::size_t k = 0; k < d.size(); ++k) {
    auto& dv = d[k]->data;
    const auto& sv = s[k]->data;
    for (std::size_t i = 0; i < dv.size(); ++i) dv[i] += alpha * sv[i];
  }
}

void scale(FloatModel& m, double alpha) {
  for_each_tensor(m, [&](Matrix& t) {
    for (double& v : t.data) v *= alpha;
  });
}

struct SplitScore {
  double loss = 0.0;
  double accuracy = 0.0;
};

SplitScore score_split(const FloatModel& m, std::span<const LabeledExample> split,
                       const std::array<double, kClasses>& weights) {
  double loss = 0.0;
  std::size_t correct = 0;
  for (const auto& ex : split) {
    const auto r = forward(ex.features, m);
    loss += loss_weighted_ce(r.probs, ex.label, weights);
    if (r.label() == ex.label) ++correct;
  }
  const auto n = static_cast<double>(split.size());
  return {loss / n, static_cast<double>(correct) / n};
}

bool better(const EpochRecord& a, const EpochRecord& b) {
  if (a.val_accuracy != b.val_accuracy) return a.val_accuracy > b.val_accuracy;
  return a.val_loss < b.val_loss;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(Errc::kInvalidArgument, "learning_rate must be > 0");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    throw Error(Errc::kInvalidArgument, "momentum must lie in [0, 1)");
  }
  if (batch_size < 1) throw Error(Errc::kInvalidArgument, "batch_size must be >= 1");
  if (epochs < 1) throw Error(Errc::kInvalidArgument, "epochs must be >= 1");
}

std::array<double, kClasses> class_weights(std::size_t n_noneating, std::size_t n_eating) {
  if (n_noneating == 0 || n_eating == 0) {
    throw Error(Errc::kClassAbsent, "both classes must be present in the training split");
  }
  const double total = static_cast<double>(n_noneating + n_eating);
  return {total / (2.0 * static_cast<double>(n_noneating)),
          total / (2.0 * static_cast<double>(n_eating))};
}

std::array<double, kClasses> class_weights(std::span<const LabeledExample> train) {
  std::size_t counts[2] = {0, 0};
  for (const auto& ex : train) {
    if (ex.label != 0 && ex.label != 1) throw Error(Errc::kInvalidArgument, "label must be 0 or 1");
    ++counts[ex.label];
  }
  return class_weights(counts[0], counts[1]);
}

FloatModel init_model(std::uint64_t seed, const ModelDims& dims) {
  FloatModel m(dims);
  XorShift64Star rng(seed);
  for_each_tensor(m, [&](Matrix& t) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(t.cols));
    for (double& v : t.data) v = rng.uniform(-bound, bound);
  });
  return m;
}

FloatModel fake_quant_model(const FloatModel& m) {
  FloatModel q = m;
  for_each_tensor(q, [](Matrix& t) { t = fake_quant(t); });
  return q;
}

std::size_t select_checkpoint(std::span<const EpochRecord> history) {
  if (history.empty()) throw Error(Errc::kInvalidArgument, "empty training history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (better(history[i], history[best])) best = i;
  }
  return best;
}

TrainResult train_with_transform(const DatasetSplits& splits, const TrainConfig& config,
                                 const WeightTransform& transform) {
  config.validate();
  if (splits.train.empty()) throw Error(Errc::kEmptySplit, "training split is empty");
  if (splits.validation.empty()) throw Error(Errc::kEmptySplit, "validation split is empty");

  const auto weights = class_weights(splits.train);
  FloatModel latent = init_model(config.seed, kTinyEatsDims);
  FloatModel velocity(latent.dims);

  TrainResult result;
  result.history.reserve(config.epochs);
  std::vector<std::size_t> order(splits.train.size());

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    XorShift64Star rng(derive_seed(config.seed, epoch));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.below(i)]);
    }

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      const FloatModel effective = transform(latent);
      FloatModel grad(latent.dims);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& ex = splits.train[order[k]];
        auto br = backward(ex.features, ex.label, effective, weights);
        if (!std::isfinite(br.loss)) {
          throw Error(Errc::kNonFiniteLoss, "non-finite loss at epoch " + std::to_string(epoch) +
                                                " on example from " + ex.source);
        }
        epoch_loss += br.loss;
        axpy(grad, 1.0, br.grad);
      }
      scale(grad, 1.0 / static_cast<double>(stop - start));
      // v <- mu v - lr g ; w <- w + v   (straight-through onto latent weights)
      scale(velocity, config.momentum);
      axpy(velocity, -config.learning_rate, grad);
      axpy(latent, 1.0, velocity);
    }

    const FloatModel effective = transform(latent);
    const SplitScore val = score_split(effective, splits.validation, weights);
    if (!std::isfinite(val.loss)) {
      throw Error(Errc::kNonFiniteLoss, "non-finite validation loss at epoch " + std::to_string(epoch));
    }
    EpochRecord rec{epoch, epoch_loss / static_cast<double>(order.size()), val.loss, val.accuracy};
    if (result.history.empty() || better(rec, result.history[result.best_epoch - 1])) {
      result.model = effective;
      result.best_epoch = epoch;
    }
    result.history.push_back(rec);
  }
  return result;
}

TrainResult train(const DatasetSplits& splits, const TrainConfig& config) {
  if (config.qat) return train_qat(splits, config);
  return train_with_transform(splits, config, [](const FloatModel& m) { return m; });
}

TrainResult train_qat(const DatasetSplits& splits, TrainConfig config) {
  config.qat = true;
  return train_with_transform(splits, config, fake_quant_model);
}

void ConfusionCounts::add(int truth, int predicted) {
  if (truth == kEating) {
    (predicted == kEating ? tp : fn) += 1;
  } else {
    (predicted == kEating ? fp : tn) += 1;
  }
}

double f1_score(double precision, double recall) {
  const double s = precision + recall;
  return s > 0.0 ? 2.0 * precision * recall / s : 0.0;
}

Metrics compute_metrics(const ConfusionCounts& c) {
  Metrics m;
  const auto total = c.total();
  if (total > 0) {
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(total);
  }
  m.precision_undefined = c.tp + c.fp == 0;
  m.recall_undefined = c.tp + c.fn == 0;
  m.precision = m.precision_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  m.recall = m.recall_undefined ? 0.0 : static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  m.f1 = f1_score(m.precision, m.recall);
  return m;
}

Evaluation evaluate(const Classifier& classify, std::span<const LabeledExample> split) {
  if (split.empty()) throw Error(Errc::kEmptySplit, "cannot evaluate an empty split");
  Evaluation ev;
  for (const auto& ex : split) ev.counts.add(ex.label, classify(ex.features));
  ev.metrics = compute_metrics(ev.counts);
  return ev;
}

Evaluation evaluate(const FloatModel& m, std::span<const LabeledExample> split) {
  return evaluate([&](const FeatureWindow& w) { return forward(w, m).label(); }, split);
}

}  // namespace tinyeats
