// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "tinyeats/byte_io.hpp"
#include "tinyeats/errors.hpp"
#include "tinyeats/file_io.hpp"
#include "tinyeats/rng.hpp"

namespace tinyeats {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::size_t synth_length(double duration_s) {
  if (!(duration_s >= kMinSynthSeconds) || !std::isfinite(duration_s)) {
    throw Error(Errc::kInvalidArgument, "synthetic duration must be at least 4 s");
  }
  return static_cast<std::size_t>(std::llround(duration_s * kRawRateHz));
}

double rms(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s / static_cast<double>(x.size()));
}

// Adds white noise 20 dB below the current RMS and scales the peak to 0.9.
void finish(std::vector<double>& x, XorShift64Star& rng) {
  // Uniform(-a, a) has RMS a / sqrt(3).
  const double a = 0.1 * rms(x) * std::sqrt(3.0);
  for (double& v : x) v += rng.uniform(-a, a);
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak > 0.0) {
    const double g = kSynthPeak / peak;
    for (double& v : x) v *= g;
  }
}

struct BandpassStage {
  double b0, b2, a1, a2;  // b1 = 0 for the constant-peak RBJ band-pass
  double s1 = 0.0, s2 = 0.0;

  BandpassStage(double f0, double q, double fs) {
    const double w0 = kTwoPi * f0 / fs;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0 = alpha / a0;
    b2 = -alpha / a0;
    a1 = -2.0 * std::cos(w0) / a0;
    a2 = (1.0 - alpha) / a0;
  }

  double operator()(double x) {
    const double y = b0 * x + s1;
    s1 = -a1 * y + s2;
    s2 = b2 * x - a2 * y;
    return y;
  }
};

}  // namespace

AudioSignal synth_eating(std::uint64_t seed, double duration_s) {
  const std::size_t n = synth_length(duration_s);
  XorShift64Star rng(seed);
  AudioSignal s;
  s.rate_hz = kRawRateHz;
  s.samples.assign(n, 0.0);

  const double rate_hz = rng.uniform(1.2, 1.8);
  const double period = 1.0 / rate_hz;
  const double fs = kRawRateHz;
  for (double onset = rng.uniform(0.0, period); onset < duration_s; onset += period) {
    const double start = onset + rng.uniform(-0.1, 0.1) * period;
    const double length = rng.uniform(0.15, 0.3);
    const double gain = rng.uniform(0.6, 1.0);
    struct Tone {
      double freq, phase, amp;
    } tones[3];
    for (auto& t : tones) t = {rng.uniform(30.0, 120.0), rng.uniform(0.0, kTwoPi), rng.uniform(0.5, 1.0)};

    const auto first = static_cast<std::ptrdiff_t>(std::ceil(start * fs));
    const auto count = static_cast<std::ptrdiff_t>(length * fs);
    for (std::ptrdiff_t k = std::max<std::ptrdiff_t>(0, -first); k < count; ++k) {
      const auto idx = static_cast<std::size_t>(first + k);
      if (idx >= n) break;
      const double env = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(k) / static_cast<double>(count));
      const double t = static_cast<double>(idx) / fs;
      double v = 0.0;
      for (const auto& tone : tones) v += tone.amp * std::sin(kTwoPi * tone.freq * t + tone.phase);
      s.samples[idx] += gain * env * v;
    }
  }
  finish(s.samples, rng);
  return s;
}

AudioSignal synth_noneating(std::uint64_t seed, double duration_s) {
  const std::size_t n = synth_length(duration_s);
  XorShift64Star rng(seed);
  AudioSignal s;
  s.rate_hz = kRawRateHz;
  s.samples.resize(n);

  // 140-240 Hz band: two cascaded band-pass sections centred at the
  // geometric mean with Q = f0 / bandwidth.
  const double f0 = std::sqrt(140.0 * 240.0);
  const double q = f0 / 100.0;
  BandpassStage bp1(f0, q, kRawRateHz), bp2(f0, q, kRawRateHz);

  // Envelope knots at random spacing and level, linearly interpolated.
  double knot_t = 0.0, knot_v = rng.uniform(0.2, 1.0);
  double next_t = rng.uniform(0.3, 1.5), next_v = rng.uniform(0.2, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kRawRateHz;
    while (t >= next_t) {
      knot_t = next_t;
      knot_v = next_v;
      next_t += rng.uniform(0.3, 1.5);
      next_v = rng.uniform(0.2, 1.0);
    }
    const double env = knot_v + (next_v - knot_v) * (t - knot_t) / (next_t - knot_t);
    s.samples[i] = env * bp2(bp1(rng.uniform(-1.0, 1.0)));
  }
  finish(s.samples, rng);
  return s;
}

double spectral_centroid(const FeatureWindow& w, const FeatureNorm& norm) {
  std::array<double, kBins> mag{};
  for (std::size_t t = 0; t < kFrames; ++t) {
    for (std::size_t b = 0; b < kBins; ++b) {
      const double logmag = norm.floor + (w.at(t, b) + 1.0) * 0.5 * (norm.ceil - norm.floor);
      mag[b] += std::pow(10.0, logmag);
    }
  }
  double num = 0.0, den = 0.0;
  for (std::size_t b = 0; b < kBins; ++b) {
    num += static_cast<double>(b) * mag[b];
    den += mag[b];
  }
  return den > 0.0 ? num / den : 0.0;
}

std::vector<std::uint8_t> encode_wav(const AudioSignal& signal, int bits) {
  if (bits != 16 && bits != 24) throw Error(Errc::kUnsupportedDepth, "WAV writer supports 16 or 24 bits");
  const std::uint32_t bytes_per_sample = static_cast<std::uint32_t>(bits / 8);
  const auto data_bytes = static_cast<std::uint32_t>(signal.samples.size() * bytes_per_sample);
  detail::ByteWriter w;
  w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("RIFF"), 4));
  w.put<std::uint32_t>(36 + data_bytes);
  w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("WAVEfmt "), 8));
  w.put<std::uint32_t>(16);
  w.put<std::uint16_t>(1);  // PCM
  w.put<std::uint16_t>(1);  // mono
  w.put<std::uint32_t>(signal.rate_hz);
  w.put<std::uint32_t>(signal.rate_hz * bytes_per_sample);
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bytes_per_sample));
  w.put<std::uint16_t>(static_cast<std::uint16_t>(bits));
  w.put_bytes(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>("data"), 4));
  w.put<std::uint32_t>(data_bytes);
  const long full = bits == 16 ? 32768 : 8388608;
  for (double x : signal.samples) {
    const auto v = static_cast<std::int32_t>(
        std::clamp(std::lround(std::clamp(x, -1.0, 1.0) * static_cast<double>(full)), -full, full - 1));
    if (bits == 16) {
      w.put(static_cast<std::int16_t>(v));
    } else {
      const auto u = static_cast<std::uint32_t>(v);
      w.put(static_cast<std::uint8_t>(u & 0xFF));
      w.put(static_cast<std::uint8_t>((u >> 8) & 0xFF));
      w.put(static_cast<std::uint8_t>((u >> 16) & 0xFF));
    }
  }
  return std::move(w.bytes());
}

void write_wav(const std::filesystem::path& path, const AudioSignal& signal, int bits) {
  write_file_bytes(path, encode_wav(signal, bits));
}

AudioSignal decode_wav(std::span<const std::uint8_t> bytes) {
  auto tag_is = [](std::span<const std::uint8_t> b, const char* tag) {
    return std::equal(b.begin(), b.begin() + 4, reinterpret_cast<const std::uint8_t*>(tag));
  };
  if (bytes.size() < 12 || !tag_is(bytes.first(4), "RIFF") || !tag_is(bytes.subspan(8, 4), "WAVE")) {
    throw Error(Errc::kNotRiff, "not a RIFF/WAVE file");
  }
  detail::ByteReader r(bytes.subspan(12));
  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  try {
    while (r.remaining() >= 8) {
      const auto id = r.get_bytes(4);
      const auto size = r.get<std::uint32_t>();
      if (tag_is(id, "fmt ")) {
        if (size < 16) throw Error(Errc::kMalformedWav, "fmt chunk too small");
        detail::ByteReader f(r.get_bytes(size));
        format = f.get<std::uint16_t>();
        channels = f.get<std::uint16_t>();
        rate = f.get<std::uint32_t>();
        f.get<std::uint32_t>();  // byte rate
        f.get<std::uint16_t>();  // block align
        bits = f.get<std::uint16_t>();
        if (format == 0xFFFE && size >= 40) {  // WAVE_FORMAT_EXTENSIBLE
          f.get<std::uint16_t>();
          f.get<std::uint16_t>();
          f.get<std::uint32_t>();
          format = f.get<std::uint16_t>();  // first two bytes of the sub-format GUID
        }
        have_fmt = true;
      } else if (tag_is(id, "data")) {
        if (!have_fmt) throw Error(Errc::kMalformedWav, "data chunk before fmt chunk");
        if (format != 1) throw Error(Errc::kNotPcm, "WAV format tag " + std::to_string(format) + " is not PCM");
        if (channels != 1) throw Error(Errc::kNotMono, "WAV has " + std::to_string(channels) + " channels, expected mono");
        if (bits != 16 && bits != 24) {
          throw Error(Errc::kUnsupportedDepth, "unsupported WAV bit depth " + std::to_string(bits));
        }
        if (rate != kRawRateHz) {
          throw Error(Errc::kWrongRate, "WAV rate " + std::to_string(rate) + " Hz, expected 20000");
        }
        const std::size_t width = bits / 8;
        if (size > r.remaining()) throw Error(Errc::kMalformedWav, "data chunk runs past end of file");
        const auto data = r.get_bytes(size - size % width);
        AudioSignal s;
        s.rate_hz = rate;
        s.samples.resize(data.size() / width);
        for (std::size_t i = 0; i < s.samples.size(); ++i) {
          const auto* p = &data[i * width];
          if (bits == 16) {
            const auto v = static_cast<std::int16_t>(p[0] | (p[1] << 8));
            s.samples[i] = v / 32768.0;
          } else {
            std::int32_t v = p[0] | (p[1] << 8) | (p[2] << 16);
            if (v & 0x800000) v -= 0x1000000;
            s.samples[i] = v / 8388608.0;
          }
        }
        return s;
      } else {
        r.get_bytes(std::min<std::size_t>(size, r.remaining()));
      }
      if (size % 2 == 1 && r.remaining() > 0) r.get_bytes(1);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::kTruncated) throw Error(Errc::kMalformedWav, "WAV chunk truncated");
    throw;
  }
  throw Error(Errc::kMalformedWav, have_fmt ? "WAV has no data chunk" : "WAV has no fmt chunk");
}

AudioSignal load_wav(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(Errc::kMissingFile, "no such file: " + path.string());
  try {
    return decode_wav(read_file_bytes(path));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::filesystem::path build_corpus(std::size_t n_eat, std::size_t n_non, std::uint64_t seed,
                                   const std::filesystem::path& out_dir) {
  if (n_eat < 1 || n_non < 1) throw Error(Errc::kInvalidArgument, "corpus needs at least one file per class");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(Errc::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  std::ostringstream manifest;
  manifest << "path,label\n";
  auto emit = [&](const std::string& stem, std::size_t i, int label) {
    char name[64];
    std::snprintf(name, sizeof name, "%s_%03zu.wav", stem.c_str(), i);
    const std::uint64_t file_seed = derive_seed(seed, (std::uint64_t(label) << 32) | i);
    const AudioSignal s = label == kEating ? synth_eating(file_seed, kCorpusFileSeconds)
                                           : synth_noneating(file_seed, kCorpusFileSeconds);
    write_wav(out_dir / name, s, 16);
    manifest << name << ',' << label << '\n';
  };
  for (std::size_t i = 0; i < n_eat; ++i) emit("eating", i, kEating);
  for (std::size_t i = 0; i < n_non; ++i) emit("noneating", i, kNonEating);

  const auto path = out_dir / "manifest.csv";
  const std::string text = manifest.str();
  write_file_bytes(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return path;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::kIo, "cannot open manifest " + path.string());
  const auto base = path.parent_path();
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw Error(Errc::kManifestParse, path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (line != "path,label") fail("expected header row 'path,label'");
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0) fail("expected 'path,label'");
    const std::string file = line.substr(0, comma);
    const std::string label = line.substr(comma + 1);
    if (label != "0" && label != "1") fail("label '" + label + "' is not 0 or 1");
    std::filesystem::path p(file);
    if (p.is_relative()) p = base / p;
    entries.push_back({p, label == "1" ? kEating : kNonEating});
  }
  if (line_no == 0) fail("empty manifest (missing header row)");
  return entries;
}

std::vector<LabeledExample> featurize(std::span<const ManifestEntry> entries) {
  std::vector<LabeledExample> out;
  for (const auto& e : entries) {
    const AudioSignal raw = load_wav(e.path);
    for (const auto& fw : extract_features(raw)) {
      out.push_back({fw, e.label, e.path.string()});
    }
  }
  return out;
}

DatasetSplits split(std::span<const LabeledExample> examples, std::array<double, 3> ratios,
                    std::uint64_t seed) {
  for (double r : ratios) {
    if (!(r > 0.0)) throw Error(Errc::kInvalidArgument, "split ratios must be positive");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw Error(Errc::kInvalidArgument, "split ratios must sum to 1");
  }

  // Group by source in first-seen order.
  std::vector<std::vector<std::size_t>> groups;
  std::vector<int> group_label;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    auto [it, inserted] = index.try_emplace(ex.source, groups.size());
    if (inserted) {
      groups.emplace_back();
      group_label.push_back(ex.label);
    } else if (group_label[it->second] != ex.label) {
      throw Error(Errc::kInvalidArgument, "source '" + ex.source + "' has mixed labels");
    }
    groups[it->second].push_back(i);
  }

  std::array<std::size_t, 3> assigned_groups{};
  std::array<std::vector<std::size_t>, 3> split_groups;
  for (int label : {kNonEating, kEating}) {
    std::vector<std::size_t> ids;
    for (std::size_t g = 0; g < groups.size(); ++g) {
      if (group_label[g] == label) ids.push_back(g);
    }
    XorShift64Star rng(derive_seed(seed, static_cast<std::uint64_t>(label)));
    for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.below(i)]);

    // Largest remainder; equal remainders go to the split holding fewer
    // groups so far, then to the earlier split.
    const auto n = static_cast<double>(ids.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t used = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      const double quota = n * ratios[k];
      counts[k] = static_cast<std::size_t>(std::floor(quota + 1e-9));
      frac[k] = quota - static_cast<double>(counts[k]);
      used += counts[k];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (std::abs(frac[a] - frac[b]) > 1e-9) return frac[a] > frac[b];
      return assigned_groups[a] < assigned_groups[b];
    });
    for (std::size_t k = 0; used < ids.size(); ++k, ++used) ++counts[order[k % 3]];

    std::size_t pos = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      for (std::size_t c = 0; c < counts[k]; ++c) split_groups[k].push_back(ids[pos++]);
      assigned_groups[k] += counts[k];
    }
  }

  DatasetSplits out;
  std::array<std::vector<LabeledExample>*, 3> dst{&out.train, &out.validation, &out.test};
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t g : split_groups[k]) {
      for (std::size_t i : groups[g]) dst[k]->push_back(examples[i]);
    }
  }
  if (out.train.empty() || out.validation.empty() || out.test.empty()) {
    throw Error(Errc::kInsufficientExamples, "not enough sources for non-empty train/validation/test splits");
  }
  const bool has0 = std::any_of(out.train.begin(), out.train.end(), [](const auto& e) { return e.label == 0; });
  const bool has1 = std::any_of(out.train.begin(), out.train.end(), [](const auto& e) { return e.label == 1; });
  if (!has0 || !has1) throw Error(Errc::kInsufficientExamples, "training split lacks one of the classes");
  return out;
}

}  // namespace tinyeats
