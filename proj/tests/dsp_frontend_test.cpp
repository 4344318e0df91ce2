// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "tinyeats/dsp_frontend.hpp"
#include "tinyeats/errors.hpp"

namespace tinyeats {
namespace {

constexpr double kPi = std::numbers::pi;

AudioSignal sine(double freq, double seconds, std::uint32_t rate, double amp = 1.0) {
  AudioSignal s;
  s.rate_hz = rate;
  const auto n = static_cast<std::size_t>(seconds * rate);
  s.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.samples[i] = amp * std::sin(2 * kPi * freq * i / rate);
  return s;
}

template <typename Fn>
Errc error_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return Errc::kInvalidArgument;
}

TEST(Decimate, ZeroSignalStaysZero) {
  AudioSignal s{std::vector<double>(80000, 0.0), kRawRateHz};
  const auto out = decimate(s);
  EXPECT_EQ(out.rate_hz, kProcessedRateHz);
  ASSERT_EQ(out.samples.size(), 2000u);
  for (double v : out.samples) EXPECT_EQ(v, 0.0);
}

TEST(Decimate, OutputLengthIsFloorOfNOver40) {
  AudioSignal s{std::vector<double>(80039, 0.25), kRawRateHz};
  EXPECT_EQ(decimate(s).samples.size(), 2000u);
}

TEST(Decimate, FiveHertzSinePassesWithUnitGain) {
  // Closed-form resampling oracle: a linear-phase FIR with 101 taps delays by
  // 50 input samples, so output k should be sin(2 pi 5 (40k - 50) / 20000).
  const auto out = decimate(sine(5.0, 4.0, kRawRateHz));
  ASSERT_EQ(out.samples.size(), 2000u);
  double s_sin = 0, s_cos = 0;
  std::size_t used = 0;
  for (std::size_t k = 3; k < out.samples.size(); ++k) {
    const double phase = 2 * kPi * 5.0 * (40.0 * k - 50.0) / kRawRateHz;
    EXPECT_NEAR(out.samples[k], std::sin(phase), 0.01) << "k=" << k;
    s_sin += out.samples[k] * std::sin(phase);
    s_cos += out.samples[k] * std::cos(phase);
    ++used;
  }
  // Least-squares amplitude over whole cycles after warm-up.
  const double amp = 2.0 * std::hypot(s_sin, s_cos) / used;
  EXPECT_NEAR(amp, 1.0, 0.01);
}

TEST(Decimate, RejectsBadInput) {
  EXPECT_EQ(error_of([] { decimate(AudioSignal{std::vector<double>(100, 0.0), 500}); }), Errc::kWrongRate);
  EXPECT_EQ(error_of([] { decimate(AudioSignal{{}, kRawRateHz}); }), Errc::kEmptySignal);
  EXPECT_EQ(error_of([] { decimate(AudioSignal{std::vector<double>(39, 0.0), kRawRateHz}); }),
            Errc::kWrongLength);
  AudioSignal nan{std::vector<double>(400, 0.0), kRawRateHz};
  nan.samples[17] = std::nan("");
  EXPECT_EQ(error_of([&] { decimate(nan); }), Errc::kNonFinite);
}

TEST(DecimatorTaps, SymmetricWithUnitDcGain) {
  const auto h = decimator_taps();
  double sum = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    EXPECT_DOUBLE_EQ(h[i], h[h.size() - 1 - i]);
    sum += h[i];
  }
  EXPECT_NEAR(sum, 1.0, 1e-15);
}

TEST(Highpass, ZeroInZeroOut) {
  const auto out = highpass(AudioSignal{std::vector<double>(1000, 0.0), kProcessedRateHz});
  for (double v : out.samples) EXPECT_EQ(v, 0.0);
}

TEST(Highpass, ConstantDecaysWithinOneSecond) {
  const auto out = highpass(AudioSignal{std::vector<double>(2000, 1.0), kProcessedRateHz});
  ASSERT_EQ(out.samples.size(), 2000u);
  for (std::size_t n = kProcessedRateHz; n < out.samples.size(); ++n) {
    EXPECT_LT(std::abs(out.samples[n]), 1e-3) << "n=" << n;
  }
}

TEST(Highpass, MatchesDirectRecursionOracle) {
  const double k = std::tan(kPi * 20.0 / 500.0);
  const double a0 = 1 + std::sqrt(2.0) * k + k * k;
  const double b[3] = {1 / a0, -2 / a0, 1 / a0};
  const double a[3] = {1, 2 * (k * k - 1) / a0, (1 - std::sqrt(2.0) * k + k * k) / a0};
  std::mt19937 gen(3);
  std::uniform_real_distribution<double> u(-1, 1);
  AudioSignal in{std::vector<double>(600), kProcessedRateHz};
  for (double& v : in.samples) v = u(gen);
  const auto out = highpass(in);
  std::vector<double> y(in.samples.size());
  for (std::size_t n = 0; n < y.size(); ++n) {
    auto x = [&](std::ptrdiff_t i) { return i < 0 ? 0.0 : in.samples[i]; };
    auto yy = [&](std::ptrdiff_t i) { return i < 0 ? 0.0 : y[i]; };
    const auto m = static_cast<std::ptrdiff_t>(n);
    y[n] = b[0] * x(m) + b[1] * x(m - 1) + b[2] * x(m - 2) - a[1] * yy(m - 1) - a[2] * yy(m - 2);
    EXPECT_NEAR(out.samples[n], y[n], 1e-12);
  }
}

TEST(Highpass, HundredHertzSteadyStateAmplitude) {
  const double expected = oracle::butterworth_hp_gain(100.0, 20.0, 500.0);
  EXPECT_GT(expected, 0.95);
  EXPECT_LT(expected, 1.05);
  const auto out = highpass(sine(100.0, 4.0, kProcessedRateHz));
  double peak = 0;
  for (std::size_t n = kProcessedRateHz; n < out.samples.size(); ++n) peak = std::max(peak, std::abs(out.samples[n]));
  // 100 Hz at 500 Hz sampling: 5 samples per cycle, so sampled peaks fall
  // below the continuous amplitude by at most cos(pi/5).
  EXPECT_LE(peak, expected + 1e-9);
  EXPECT_GE(peak, expected * std::cos(kPi / 5.0) - 1e-9);
  // Energy-based amplitude is exact over whole cycles.
  double e = 0;
  std::size_t n0 = kProcessedRateHz, n1 = out.samples.size();
  for (std::size_t n = n0; n < n1; ++n) e += out.samples[n] * out.samples[n];
  EXPECT_NEAR(std::sqrt(2.0 * e / (n1 - n0)), expected, 1e-6);
}

TEST(Highpass, RejectsWrongRateAndNaN) {
  EXPECT_EQ(error_of([] { highpass(AudioSignal{std::vector<double>(10, 0.0), kRawRateHz}); }), Errc::kWrongRate);
  AudioSignal s{std::vector<double>(10, 0.0), kProcessedRateHz};
  s.samples[3] = INFINITY;
  EXPECT_EQ(error_of([&] { highpass(s); }), Errc::kNonFinite);
}

TEST(Segment, WindowCounts) {
  auto count = [](std::size_t n) {
    return segment(AudioSignal{std::vector<double>(n, 0.0), kProcessedRateHz}).size();
  };
  EXPECT_EQ(count(4000), 2u);
  EXPECT_EQ(count(2500), 1u);
  EXPECT_EQ(count(1999), 0u);
}

TEST(Segment, WindowsAreConsecutive) {
  AudioSignal s{std::vector<double>(4500), kProcessedRateHz};
  for (std::size_t i = 0; i < s.samples.size(); ++i) s.samples[i] = double(i);
  const auto w = segment(s);
  ASSERT_EQ(w.size(), 2u);
  EXPECT_EQ(w[0].front(), 0.0);
  EXPECT_EQ(w[1].front(), 2000.0);
  EXPECT_EQ(w[1].back(), 3999.0);
}

TEST(Stft, ZeroWindowIsLogFloor) {
  const auto lm = stft_logmag(std::vector<double>(kWindowSamples, 0.0));
  for (double v : lm) EXPECT_DOUBLE_EQ(v, -6.0);
}

TEST(Stft, CosineAtBinEightPeaksWithMagnitude64) {
  std::vector<double> w(kWindowSamples, 0.0);
  const std::size_t frame = 4;
  for (std::size_t n = 0; n < kFftSize; ++n) w[frame * kFftSize + n] = std::cos(2 * kPi * 8 * n / 128.0);
  const auto lm = stft_logmag(w);
  std::size_t arg = 0;
  for (std::size_t b = 0; b < kBins; ++b) {
    if (lm[frame * kBins + b] > lm[frame * kBins + arg]) arg = b;
  }
  EXPECT_EQ(arg, 8u);
  EXPECT_NEAR(std::pow(10.0, lm[frame * kBins + 8]) - kLogFloor, 64.0, 1e-9);
}

TEST(Stft, LastEightySamplesAreIgnored) {
  std::vector<double> w(kWindowSamples, 0.0);
  for (std::size_t i = 1920; i < 2000; ++i) w[i] = 1.0;
  for (double v : stft_logmag(w)) EXPECT_DOUBLE_EQ(v, -6.0);
}

TEST(Stft, MatchesNaiveDftAndParseval) {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> w(kWindowSamples);
  for (double& v : w) v = u(gen);
  const auto lm = stft_logmag(w);
  for (std::size_t t = 0; t < kFrames; ++t) {
    const std::span<const double> frame(&w[t * kFftSize], kFftSize);
    const auto ref = oracle::naive_dft_magnitudes(frame);
    for (std::size_t b = 0; b < kBins; ++b) {
      const double mag = std::pow(10.0, lm[t * kBins + b]) - kLogFloor;
      EXPECT_NEAR(mag, ref[b], 1e-9) << "frame " << t << " bin " << b;
    }
    // Parseval on the two-sided spectrum reconstructed from the one-sided bins.
    double time_energy = 0, freq_energy = 0;
    for (double v : frame) time_energy += v * v;
    for (std::size_t b = 0; b < kBins; ++b) {
      const double m = std::pow(10.0, lm[t * kBins + b]) - kLogFloor;
      freq_energy += (b == 0 || b == kBins - 1 ? 1.0 : 2.0) * m * m;
    }
    EXPECT_NEAR(freq_energy / kFftSize, time_energy, 1e-6 * time_energy);
  }
}

TEST(Stft, RejectsWrongLengthAndNaN) {
  EXPECT_EQ(error_of([] { stft_logmag(std::vector<double>(1999, 0.0)); }), Errc::kWrongLength);
  std::vector<double> w(kWindowSamples, 0.0);
  w[5] = std::nan("");
  EXPECT_EQ(error_of([&] { stft_logmag(w); }), Errc::kNonFinite);
}

TEST(Fft, RejectsNonPowerOfTwo) {
  std::vector<std::complex<double>> v(12);
  EXPECT_EQ(error_of([&] { fft_radix2(v); }), Errc::kWrongLength);
}

TEST(Normalize, AffineEndpointsAndClipping) {
  LogMagnitude lm{};
  lm.fill(-2.0);
  lm[0] = -6.0;
  lm[1] = 2.0;
  lm[2] = -9.0;
  lm[3] = 5.0;
  const auto fw = normalize_features(lm);
  EXPECT_DOUBLE_EQ(fw.values[0], -1.0);
  EXPECT_DOUBLE_EQ(fw.values[1], 1.0);
  EXPECT_DOUBLE_EQ(fw.values[2], -1.0);
  EXPECT_DOUBLE_EQ(fw.values[3], 1.0);
  EXPECT_DOUBLE_EQ(fw.values[4], 0.0);
}

TEST(Normalize, RejectsNonFinite) {
  LogMagnitude lm{};
  lm[7] = std::nan("");
  EXPECT_EQ(error_of([&] { normalize_features(lm); }), Errc::kNonFinite);
}

TEST(Pipeline, DeterministicAndBounded) {
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> u(-1, 1);
  AudioSignal raw{std::vector<double>(kRawRateHz * 9), kRawRateHz};
  for (double& v : raw.samples) v = 0.5 * u(gen);
  const auto a = extract_features(raw);
  const auto b = extract_features(raw);
  ASSERT_EQ(a.size(), 2u);  // 9 s -> 4500 samples -> 2 windows
  EXPECT_EQ(a, b);
  for (const auto& fw : a) {
    for (double v : fw.values) {
      EXPECT_GE(v, -1.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

}  // namespace
}  // namespace tinyeats
