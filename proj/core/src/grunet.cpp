// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/grunet.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tinyeats/errors.hpp"

namespace tinyeats {
namespace {

// Forward intermediates of one GRU layer over a sequence. Row t of each
// buffer belongs to step t; `h` has T+1 rows with h[0] = 0.
struct LayerTrace {
  std::size_t steps = 0;
  std::size_t hidden = 0;
  std::vector<double> h, pre_r, pre_z, pre_h, r, z, cand;

  LayerTrace(std::size_t t, std::size_t n)
      : steps(t), hidden(n), h((t + 1) * n, 0.0), pre_r(t * n), pre_z(t * n), pre_h(t * n),
        r(t * n), z(t * n), cand(t * n) {}

  std::span<const double> state(std::size_t t) const {
    return std::span<const double>(h).subspan(t * hidden, hidden);
  }
  // Outputs h_1..h_T as one T x hidden block.
  std::span<const double> outputs() const {
    return std::span<const double>(h).subspan(hidden, steps * hidden);
  }
};

// y = W [a, b]
void matvec_concat(const Matrix& w, std::span<const double> a, std::span<const double> b,
                   std::span<double> y) {
  const std::size_t na = a.size();
  for (std::size_t i = 0; i < w.rows; ++i) {
    const double* row = &w.data[i * w.cols];
    double acc = 0.0;
    for (std::size_t j = 0; j < na; ++j) acc += row[j] * a[j];
    for (std::size_t j = 0; j < b.size(); ++j) acc += row[na + j] * b[j];
    y[i] = acc;
  }
}

void run_step(std::span<const double> x, std::span<const double> hp, const GruLayerParams& p,
              double* pre_r, double* pre_z, double* pre_h, double* r, double* z, double* cand,
              double* h_out) {
  const std::size_t n = p.hidden();
  matvec_concat(p.reset, x, hp, {pre_r, n});
  matvec_concat(p.update, x, hp, {pre_z, n});
  std::vector<double> rh(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = shifted_softsign(pre_r[i]);
    z[i] = shifted_softsign(pre_z[i]);
    rh[i] = r[i] * hp[i];
  }
  matvec_concat(p.candidate, x, rh, {pre_h, n});
  for (std::size_t i = 0; i < n; ++i) {
    cand[i] = softsign(pre_h[i]);
    h_out[i] = cand[i] + z[i] * (hp[i] - cand[i]);
  }
}

LayerTrace run_layer(SequenceView seq, const GruLayerParams& p) {
  const std::size_t n = p.hidden();
  LayerTrace tr(seq.steps, n);
  for (std::size_t t = 0; t < seq.steps; ++t) {
    const std::size_t o = t * n;
    run_step(seq.step(t), tr.state(t), p, &tr.pre_r[o], &tr.pre_z[o], &tr.pre_h[o], &tr.r[o],
             &tr.z[o], &tr.cand[o], &tr.h[o + n]);
  }
  return tr;
}

// BPTT through one layer. `d_out` holds dL/dh_t for t = 1..T coming from
// above (T x hidden); `d_in` (T x input) receives dL/dx_t when non-empty.
void backprop_layer(SequenceView seq, const GruLayerParams& p, const LayerTrace& tr,
                    std::span<const double> d_out, GruLayerParams& g, std::span<double> d_in) {
  const std::size_t n = p.hidden();
  const std::size_t in = seq.width;
  const std::size_t cols = in + n;
  std::vector<double> carry(n, 0.0), dh(n), dhp(n), dr(n), da(n), rh(n);

  for (std::size_t t = seq.steps; t-- > 0;) {
    const std::size_t o = t * n;
    const auto x = seq.step(t);
    const auto hp = tr.state(t);
    for (std::size_t i = 0; i < n; ++i) dh[i] = d_out[o + i] + carry[i];

    std::fill(dhp.begin(), dhp.end(), 0.0);
    std::fill(dr.begin(), dr.end(), 0.0);
    double* dx = d_in.empty() ? nullptr : &d_in[t * in];

    // Candidate branch: h~ = ss(W_h [x, r*h]).
    for (std::size_t i = 0; i < n; ++i) {
      const double z = tr.z[o + i];
      dhp[i] += dh[i] * z;
      da[i] = dh[i] * (1.0 - z) * softsign_grad(tr.pre_h[o + i]);
      rh[i] = tr.r[o + i] * hp[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double d = da[i];
      if (d == 0.0) continue;
      double* grow = &g.candidate.data[i * cols];
      const double* wrow = &p.candidate.data[i * cols];
      for (std::size_t j = 0; j < in; ++j) {
        grow[j] += d * x[j];
        if (dx) dx[j] += d * wrow[j];
      }
      for (std::size_t k = 0; k < n; ++k) {
        grow[in + k] += d * rh[k];
        const double drh = d * wrow[in + k];
        dr[k] += drh * hp[k];
        dhp[k] += drh * tr.r[o + k];
      }
    }

    // Update gate: z = (ss(W_z [x, h]) + 1) / 2, dL/dz = dh * (h_prev - h~).
    for (std::size_t i = 0; i < n; ++i) {
      const double dz = dh[i] * (hp[i] - tr.cand[o + i]);
      da[i] = dz * 0.5 * softsign_grad(tr.pre_z[o + i]);
    }
    auto gate_backprop = [&](const Matrix& w, Matrix& gw) {
      for (std::size_t i = 0; i < n; ++i) {
        const double d = da[i];
        if (d == 0.0) continue;
        double* grow = &gw.data[i * cols];
        const double* wrow = &w.data[i * cols];
        for (std::size_t j = 0; j < in; ++j) {
          grow[j] += d * x[j];
          if (dx) dx[j] += d * wrow[j];
        }
        for (std::size_t k = 0; k < n; ++k) {
          grow[in + k] += d * hp[k];
          dhp[k] += d * wrow[in + k];
        }
      }
    };
    gate_backprop(p.update, g.update);

    // Reset gate.
    for (std::size_t i = 0; i < n; ++i) {
      da[i] = dr[i] * 0.5 * softsign_grad(tr.pre_r[o + i]);
    }
    gate_backprop(p.reset, g.reset);

    carry = dhp;
  }
}

void check_layer(const GruLayerParams& p, std::size_t input, std::size_t hidden, const char* name) {
  for (const Matrix* w : {&p.reset, &p.update, &p.candidate}) {
    if (w->rows != hidden || w->cols != input + hidden || w->data.size() != w->rows * w->cols) {
      throw Error(Errc::kDimensionMismatch, std::string(name) + " weight shape mismatch");
    }
  }
}

}  // namespace

FloatModel::FloatModel(const ModelDims& d)
    : dims(d),
      gru1(d.input, d.hidden1),
      gru2(d.hidden1, d.hidden2),
      fc(d.fc, d.hidden2),
      out(d.classes, d.fc) {}

void validate(const FloatModel& m) {
  const auto& d = m.dims;
  if (d.classes != kClasses) throw Error(Errc::kDimensionMismatch, "model must have 2 classes");
  check_layer(m.gru1, d.input, d.hidden1, "gru1");
  check_layer(m.gru2, d.hidden1, d.hidden2, "gru2");
  if (m.fc.rows != d.fc || m.fc.cols != d.hidden2 || m.fc.data.size() != d.fc * d.hidden2) {
    throw Error(Errc::kDimensionMismatch, "fc weight shape mismatch");
  }
  if (m.out.rows != d.classes || m.out.cols != d.fc || m.out.data.size() != d.classes * d.fc) {
    throw Error(Errc::kDimensionMismatch, "output weight shape mismatch");
  }
  for_each_tensor(m, [](const Matrix& w) {
    for (double v : w.data) {
      if (!std::isfinite(v)) throw Error(Errc::kNonFinite, "non-finite model weight");
    }
  });
}

double softsign(double x) { return x / (1.0 + std::abs(x)); }

double shifted_softsign(double x) { return 0.5 * (softsign(x) + 1.0); }

double softsign_grad(double x) {
  const double d = 1.0 + std::abs(x);
  return 1.0 / (d * d);
}

std::vector<double> gru_blend(std::span<const double> z, std::span<const double> h_prev,
                              std::span<const double> candidate) {
  std::vector<double> h(candidate.size());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = candidate[i] + z[i] * (h_prev[i] - candidate[i]);
  return h;
}

std::vector<double> gru_step(std::span<const double> x, std::span<const double> h_prev,
                             const GruLayerParams& p) {
  const std::size_t n = p.hidden();
  if (h_prev.size() != n || x.size() != p.input()) {
    throw Error(Errc::kDimensionMismatch, "gru_step: input/state size does not match weights");
  }
  check_layer(p, x.size(), n, "gru_step");
  std::vector<double> scratch(6 * n), h(n);
  run_step(x, h_prev, p, &scratch[0], &scratch[n], &scratch[2 * n], &scratch[3 * n],
           &scratch[4 * n], &scratch[5 * n], h.data());
  return h;
}

std::array<double, kClasses> softmax(const std::array<double, kClasses>& logits) {
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double s = e0 + e1;
  return {e0 / s, e1 / s};
}

namespace {

struct HeadTrace {
  std::vector<double> pre_fc, act_fc;
  ForwardResult result;
};

HeadTrace run_head(std::span<const double> h_last, const FloatModel& m) {
  HeadTrace ht;
  ht.pre_fc.assign(m.fc.rows, 0.0);
  ht.act_fc.assign(m.fc.rows, 0.0);
  for (std::size_t i = 0; i < m.fc.rows; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.fc.cols; ++j) acc += m.fc(i, j) * h_last[j];
    ht.pre_fc[i] = acc;
    ht.act_fc[i] = softsign(acc);
  }
  for (std::size_t c = 0; c < kClasses; ++c) {
    double acc = 0.0;
    for (std::size_t j = 0; j < m.out.cols; ++j) acc += m.out(c, j) * ht.act_fc[j];
    ht.result.logits[c] = acc;
  }
  ht.result.probs = softmax(ht.result.logits);
  return ht;
}

void check_sequence(SequenceView seq, const FloatModel& m) {
  if (seq.width != m.dims.input || seq.data.size() != seq.steps * seq.width || seq.steps == 0) {
    throw Error(Errc::kDimensionMismatch, "input sequence does not match model input width");
  }
}

}  // namespace

ForwardResult forward(SequenceView seq, const FloatModel& m) {
  check_sequence(seq, m);
  const LayerTrace l1 = run_layer(seq, m.gru1);
  const LayerTrace l2 = run_layer({l1.outputs(), seq.steps, m.dims.hidden1}, m.gru2);
  return run_head(l2.state(seq.steps), m).result;
}

double loss_weighted_ce(const std::array<double, kClasses>& probs, int label,
                        const std::array<double, kClasses>& class_weights) {
  if (label != 0 && label != 1) {
    throw Error(Errc::kInvalidArgument, "label must be 0 or 1, got " + std::to_string(label));
  }
  const auto c = static_cast<std::size_t>(label);
  return -class_weights[c] * std::log(std::max(probs[c], 1e-12));
}

BackwardResult backward(SequenceView seq, int label, const FloatModel& m,
                        const std::array<double, kClasses>& class_weights) {
  check_sequence(seq, m);
  const auto& d = m.dims;
  const LayerTrace l1 = run_layer(seq, m.gru1);
  const SequenceView mid{l1.outputs(), seq.steps, d.hidden1};
  const LayerTrace l2 = run_layer(mid, m.gru2);
  const auto h_last = l2.state(seq.steps);
  const HeadTrace head = run_head(h_last, m);

  BackwardResult res;
  res.forward = head.result;
  res.loss = loss_weighted_ce(head.result.probs, label, class_weights);
  res.grad = ModelGradient(d);
  res.grad.norm = m.norm;
  auto& g = res.grad;

  // Softmax + CE: dL/dlogit = w_label * (p - onehot).
  const double w = class_weights[static_cast<std::size_t>(label)];
  std::array<double, kClasses> dlogit{};
  for (std::size_t c = 0; c < kClasses; ++c) {
    dlogit[c] = w * (head.result.probs[c] - (static_cast<int>(c) == label ? 1.0 : 0.0));
  }

  std::vector<double> dpre_fc(d.fc, 0.0);
  for (std::size_t j = 0; j < d.fc; ++j) {
    double dact = 0.0;
    for (std::size_t c = 0; c < kClasses; ++c) {
      g.out(c, j) = dlogit[c] * head.act_fc[j];
      dact += m.out(c, j) * dlogit[c];
    }
    dpre_fc[j] = dact * softsign_grad(head.pre_fc[j]);
  }

  std::vector<double> dh2(seq.steps * d.hidden2, 0.0);
  double* dh_last = &dh2[(seq.steps - 1) * d.hidden2];
  for (std::size_t i = 0; i < d.fc; ++i) {
    for (std::size_t j = 0; j < d.hidden2; ++j) {
      g.fc(i, j) = dpre_fc[i] * h_last[j];
      dh_last[j] += m.fc(i, j) * dpre_fc[i];
    }
  }

  std::vector<double> dh1(seq.steps * d.hidden1, 0.0);
  backprop_layer(mid, m.gru2, l2, dh2, g.gru2, dh1);
  backprop_layer(seq, m.gru1, l1, dh1, g.gru1, {});
  return res;
}

}  // namespace tinyeats
