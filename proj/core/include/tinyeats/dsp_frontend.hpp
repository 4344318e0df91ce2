// SPDX-License-Identifier: Apache-2.0

// Audio front end: 20 kHz capture -> 500 Hz -> 20 Hz high-pass -> 4 s windows
// -> 15x65 log-magnitude STFT -> normalized feature window.

#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tinyeats {

inline constexpr std::uint32_t kRawRateHz = 20000;
inline constexpr std::uint32_t kProcessedRateHz = 500;
inline constexpr std::size_t kDecimationFactor = kRawRateHz / kProcessedRateHz;
inline constexpr std::size_t kDecimatorTaps = 101;
inline constexpr double kDecimatorCutoffHz = 200.0;
inline constexpr double kHighpassCutoffHz = 20.0;

inline constexpr std::size_t kWindowSamples = 2000;  // 4 s at 500 Hz
inline constexpr std::size_t kFftSize = 128;
inline constexpr std::size_t kFrames = kWindowSamples / kFftSize;  // 15
inline constexpr std::size_t kBins = kFftSize / 2 + 1;             // 65
inline constexpr double kLogFloor = 1e-6;

struct AudioSignal {
  std::vector<double> samples;
  std::uint32_t rate_hz = 0;
};

/// Fixed affine map from log-magnitude [floor, ceil] onto [-1, +1]. The
/// constants travel with the model so inference needs no dataset statistics.
struct FeatureNorm {
  double floor = -6.0;
  double ceil = 2.0;

  bool operator==(const FeatureNorm&) const = default;
};

/// Row-major matrix of log10 magnitudes, kFrames x kBins.
using LogMagnitude = std::array<double, kFrames * kBins>;

/// One 4 s window of normalized features; every entry lies in [-1, +1].
struct FeatureWindow {
  static constexpr std::size_t kRows = kFrames;
  static constexpr std::size_t kCols = kBins;

  std::array<double, kRows * kCols> values{};

  double at(std::size_t frame, std::size_t bin) const {
    return values[frame * kCols + bin];
  }
  std::span<const double> frame(std::size_t t) const {
    return std::span<const double>(values).subspan(t * kCols, kCols);
  }

  bool operator==(const FeatureWindow&) const = default;
};

/// Windowed-sinc (Hamming) low-pass taps, unity DC gain.
std::array<double, kDecimatorTaps> decimator_taps();

/// Anti-alias filter at 20 kHz and keep every 40th sample.
AudioSignal decimate(const AudioSignal& signal);

struct Biquad {
  double b0, b1, b2, a1, a2;  // a0 normalized to 1
};

/// Second-order Butterworth high-pass via the bilinear transform.
Biquad design_butterworth_highpass(double cutoff_hz, double rate_hz);

/// Causal 20 Hz high-pass at 500 Hz.
AudioSignal highpass(const AudioSignal& signal);

/// Non-overlapping 2000-sample windows; a short trailing remainder is dropped.
std::vector<std::vector<double>> segment(const AudioSignal& signal);

/// In-place iterative radix-2 FFT. Size must be a power of two.
void fft_radix2(std::span<std::complex<double>> data);

/// 15 rectangular frames of 128 samples (last 80 samples unused), one-sided
/// magnitudes, log10(|X| + 1e-6).
LogMagnitude stft_logmag(std::span<const double> window);

FeatureWindow normalize_features(const LogMagnitude& logmag,
                                 const FeatureNorm& norm = {});

/// decimate -> highpass -> segment -> stft_logmag -> normalize_features.
std::vector<FeatureWindow> extract_features(const AudioSignal& raw,
                                            const FeatureNorm& norm = {});

}  // namespace tinyeats
