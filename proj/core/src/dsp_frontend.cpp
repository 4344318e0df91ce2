// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/dsp_frontend.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>
#include <string>

#include "tinyeats/errors.hpp"

namespace tinyeats {
namespace {

void require_rate(const AudioSignal& s, std::uint32_t rate) {
  if (s.rate_hz != rate) {
    throw Error(Errc::kWrongRate, "expected " + std::to_string(rate) +
                                      " Hz signal, got " +
                                      std::to_string(s.rate_hz) + " Hz");
  }
}

void require_finite(std::span<const double> xs) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw Error(Errc::kNonFinite, "non-finite sample in signal");
    }
  }
}

}  // namespace

std::array<double, kDecimatorTaps> decimator_taps() {
  std::array<double, kDecimatorTaps> h{};
  constexpr double kPi = std::numbers::pi;
  const double fc = kDecimatorCutoffHz / kRawRateHz;  // cycles per sample
  const double mid = (kDecimatorTaps - 1) / 2.0;
  double sum = 0.0;
  for (std::size_t n = 0; n <= kDecimatorTaps / 2; ++n) {
    const double m = static_cast<double>(n) - mid;
    const double sinc = m == 0.0 ? 2.0 * fc : std::sin(2.0 * kPi * fc * m) / (kPi * m);
    const double hamming =
        0.54 - 0.46 * std::cos(2.0 * kPi * static_cast<double>(n) / (kDecimatorTaps - 1));
    h[n] = sinc * hamming;
    h[kDecimatorTaps - 1 - n] = h[n];
  }
  for (double v : h) sum += v;
  for (double& v : h) v /= sum;
  return h;
}

AudioSignal decimate(const AudioSignal& signal) {
  require_rate(signal, kRawRateHz);
  if (signal.samples.empty()) {
    throw Error(Errc::kEmptySignal, "cannot decimate an empty signal");
  }
  if (signal.samples.size() < kDecimationFactor) {
    throw Error(Errc::kWrongLength, "signal shorter than one decimation period (40 samples)");
  }
  require_finite(signal.samples);

  static const auto taps = decimator_taps();
  const auto& x = signal.samples;
  const std::size_t out_len = x.size() / kDecimationFactor;

  AudioSignal out;
  out.rate_hz = kProcessedRateHz;
  out.samples.resize(out_len);
  // Causal FIR, evaluated only at the retained sample positions.
  for (std::size_t k = 0; k < out_len; ++k) {
    const std::size_t n = k * kDecimationFactor;
    const std::size_t depth = std::min(n + 1, kDecimatorTaps);
    double acc = 0.0;
    for (std::size_t j = 0; j < depth; ++j) acc += taps[j] * x[n - j];
    out.samples[k] = acc;
  }
  return out;
}

Biquad design_butterworth_highpass(double cutoff_hz, double rate_hz) {
  if (!(cutoff_hz > 0.0) || !(rate_hz > 2.0 * cutoff_hz)) {
    throw Error(Errc::kInvalidArgument, "high-pass cutoff must lie in (0, rate/2)");
  }
  // Bilinear transform of H(s) = s^2 / (s^2 + sqrt(2) s + 1), prewarped so
  // the -3 dB point lands exactly on cutoff_hz.
  const double k = std::tan(std::numbers::pi * cutoff_hz / rate_hz);
  const double k2 = k * k;
  const double norm = 1.0 / (1.0 + std::numbers::sqrt2 * k + k2);
  Biquad q{};
  q.b0 = norm;
  q.b1 = -2.0 * norm;
  q.b2 = norm;
  q.a1 = 2.0 * (k2 - 1.0) * norm;
  q.a2 = (1.0 - std::numbers::sqrt2 * k + k2) * norm;
  return q;
}

AudioSignal highpass(const AudioSignal& signal) {
  require_rate(signal, kProcessedRateHz);
  require_finite(signal.samples);

  static const Biquad q = design_butterworth_highpass(kHighpassCutoffHz, kProcessedRateHz);
  AudioSignal out;
  out.rate_hz = signal.rate_hz;
  out.samples.resize(signal.samples.size());
  // Transposed direct form II, zero initial state.
  double s1 = 0.0;
  double s2 = 0.0;
  for (std::size_t n = 0; n < signal.samples.size(); ++n) {
    const double x = signal.samples[n];
    const double y = q.b0 * x + s1;
    s1 = q.b1 * x - q.a1 * y + s2;
    s2 = q.b2 * x - q.a2 * y;
    out.samples[n] = y;
  }
  return out;
}

std::vector<std::vector<double>> segment(const AudioSignal& signal) {
  require_rate(signal, kProcessedRateHz);
  std::vector<std::vector<double>> windows;
  const std::size_t count = signal.samples.size() / kWindowSamples;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const auto first = signal.samples.begin() + static_cast<std::ptrdiff_t>(w * kWindowSamples);
    windows.emplace_back(first, first + kWindowSamples);
  }
  return windows;
}

void fft_radix2(std::span<std::complex<double>> data) {
  const std::size_t n = data.size();
  if (n == 0 || !std::has_single_bit(n)) {
    throw Error(Errc::kWrongLength, "FFT size must be a power of two");
  }
  // Bit-reversal permutation.
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = -2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        // Twiddles computed directly (not by recurrence) to keep error at
        // a few ulps for the oracle comparison.
        const double a = angle * static_cast<double>(k);
        const std::complex<double> w(std::cos(a), std::sin(a));
        const auto u = data[start + k];
        const auto v = data[start + k + half] * w;
        data[start + k] = u + v;
        data[start + k + half] = u - v;
      }
    }
  }
}

LogMagnitude stft_logmag(std::span<const double> window) {
  if (window.size() != kWindowSamples) {
    throw Error(Errc::kWrongLength, "STFT window must hold exactly 2000 samples, got " +
                                        std::to_string(window.size()));
  }
  require_finite(window);

  LogMagnitude out{};
  std::array<std::complex<double>, kFftSize> frame{};
  for (std::size_t t = 0; t < kFrames; ++t) {
    for (std::size_t i = 0; i < kFftSize; ++i) {
      frame[i] = {window[t * kFftSize + i], 0.0};
    }
    fft_radix2(frame);
    for (std::size_t b = 0; b < kBins; ++b) {
      out[t * kBins + b] = std::log10(std::abs(frame[b]) + kLogFloor);
    }
  }
  return out;
}

FeatureWindow normalize_features(const LogMagnitude& logmag, const FeatureNorm& norm) {
  const double span = norm.ceil - norm.floor;
  FeatureWindow fw;
  for (std::size_t i = 0; i < logmag.size(); ++i) {
    const double v = logmag[i];
    if (!std::isfinite(v)) {
      throw Error(Errc::kNonFinite, "non-finite log-magnitude entry");
    }
    const double mapped = 2.0 * (v - norm.floor) / span - 1.0;
    fw.values[i] = std::clamp(mapped, -1.0, 1.0);
  }
  return fw;
}

std::vector<FeatureWindow> extract_features(const AudioSignal& raw, const FeatureNorm& norm) {
  const AudioSignal filtered = highpass(decimate(raw));
  std::vector<FeatureWindow> out;
  for (const auto& w : segment(filtered)) {
    out.push_back(normalize_features(stft_logmag(w), norm));
  }
  return out;
}

}  // namespace tinyeats
