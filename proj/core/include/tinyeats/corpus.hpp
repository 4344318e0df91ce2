// SPDX-License-Identifier: Apache-2.0

// Synthetic eating / non-eating audio, WAV and manifest I/O, featurization
// and file-level stratified splitting.

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "tinyeats/dsp_frontend.hpp"
#include "tinyeats/trainer.hpp"

namespace tinyeats {

inline constexpr double kMinSynthSeconds = 4.0;
inline constexpr double kCorpusFileSeconds = 120.0;
inline constexpr double kSynthPeak = 0.9;

/// Chewing surrogate at 20 kHz: Hann-windowed bursts repeating at a seeded
/// 1.2-1.8 Hz rate, each a mix of tones in 30-120 Hz, plus white noise 20 dB
/// below the signal RMS; peak normalized to 0.9.
AudioSignal synth_eating(std::uint64_t seed, double duration_s);

/// Non-eating surrogate at 20 kHz: noise band-limited to 140-240 Hz under a
/// random piecewise-linear (non-periodic) envelope, same noise floor and
/// peak normalization.
AudioSignal synth_noneating(std::uint64_t seed, double duration_s);

/// Magnitude-weighted mean bin index (0..64) over all frames, computed from
/// de-normalized features.
double spectral_centroid(const FeatureWindow& w, const FeatureNorm& norm = {});

/// 16- or 24-bit PCM mono WAV. Samples are clamped to [-1, 1] and rounded.
void write_wav(const std::filesystem::path& path, const AudioSignal& signal, int bits = 16);
std::vector<std::uint8_t> encode_wav(const AudioSignal& signal, int bits = 16);

/// Accepts RIFF/WAVE PCM mono, 16- or 24-bit, 20 kHz; samples scaled by
/// 2^-15 or 2^-23. Each rejection class has its own Errc.
AudioSignal load_wav(const std::filesystem::path& path);
AudioSignal decode_wav(std::span<const std::uint8_t> bytes);

struct ManifestEntry {
  std::filesystem::path path;
  int label = 0;
};

/// Writes `n_eat` eating and `n_non` non-eating 120 s WAV files into
/// out_dir plus manifest.csv; returns the manifest path.
std::filesystem::path build_corpus(std::size_t n_eat, std::size_t n_non, std::uint64_t seed,
                                   const std::filesystem::path& out_dir);

/// "path,label" CSV with a header row. Relative paths resolve against the
/// manifest's directory. Errors name the offending line.
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Runs the DSP front end on each file; every window inherits the file label
/// and uses the file path as its source.
std::vector<LabeledExample> featurize(std::span<const ManifestEntry> entries);

/// File-level stratified split. Examples sharing a source stay together;
/// per-label group counts follow largest-remainder rounding.
DatasetSplits split(std::span<const LabeledExample> examples,
                    std::array<double, 3> ratios = {0.7, 0.15, 0.15}, std::uint64_t seed = 0);

}  // namespace tinyeats
