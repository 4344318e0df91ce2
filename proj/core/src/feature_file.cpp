// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/feature_file.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "tinyeats/byte_io.hpp"
#include "tinyeats/crc32.hpp"
#include "tinyeats/errors.hpp"
#include "tinyeats/file_io.hpp"

namespace tinyeats {
namespace {

constexpr std::uint8_t kMagic[4] = {'T', 'E', 'F', 'W'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 4 + 2 + 2;
constexpr std::size_t kWindowBytes = FeatureWindow::kRows * FeatureWindow::kCols * 4;

}  // namespace

std::vector<std::uint8_t> encode_feature_file(std::span<const FeatureWindow> windows) {
  detail::ByteWriter w;
  w.put_bytes(kMagic);
  w.put<std::uint16_t>(kFeatureFileVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(windows.size()));
  w.put<std::uint16_t>(FeatureWindow::kRows);
  w.put<std::uint16_t>(FeatureWindow::kCols);
  for (const auto& fw : windows) {
    for (double v : fw.values) w.put(static_cast<float>(v));
  }
  w.put(crc32_ieee(w.bytes()));
  return std::move(w.bytes());
}

std::vector<FeatureWindow> decode_feature_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4) throw Error(Errc::kTruncated, "feature file too short");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw Error(Errc::kBadMagic, "not a TEFW feature file");
  }
  if (bytes.size() < kHeaderBytes + 4) throw Error(Errc::kTruncated, "feature file too short");

  detail::ByteReader r(bytes);
  r.get_bytes(4);
  if (const auto version = r.get<std::uint16_t>(); version != kFeatureFileVersion) {
    throw Error(Errc::kUnsupportedVersion,
                "unsupported TEFW version " + std::to_string(version));
  }
  const auto count = r.get<std::uint32_t>();
  const auto rows = r.get<std::uint16_t>();
  const auto cols = r.get<std::uint16_t>();
  if (rows != FeatureWindow::kRows || cols != FeatureWindow::kCols) {
    throw Error(Errc::kDimensionMismatch, "TEFW window shape " + std::to_string(rows) + "x" +
                                              std::to_string(cols) + ", expected 15x65");
  }
  const std::size_t expected = kHeaderBytes + std::size_t{count} * kWindowBytes + 4;
  if (bytes.size() < expected) throw Error(Errc::kTruncated, "feature file truncated");
  if (bytes.size() > expected) throw Error(Errc::kTrailingBytes, "trailing bytes after TEFW CRC");

  const std::uint32_t stored = detail::ByteReader(bytes.subspan(expected - 4)).get<std::uint32_t>();
  if (crc32_ieee(bytes.first(expected - 4)) != stored) {
    throw Error(Errc::kCrcMismatch, "TEFW CRC mismatch");
  }

  std::vector<FeatureWindow> windows(count);
  for (auto& fw : windows) {
    for (double& v : fw.values) {
      const float f = r.get<float>();
      if (!std::isfinite(f) || f < -1.0f || f > 1.0f) {
        throw Error(Errc::kInvalidPayload, "TEFW value outside [-1, 1]");
      }
      v = f;
    }
  }
  return windows;
}

void save_feature_file(const std::filesystem::path& path, std::span<const FeatureWindow> windows) {
  write_file_bytes(path, encode_feature_file(windows));
}

std::vector<FeatureWindow> load_feature_file(const std::filesystem::path& path) {
  return decode_feature_file(read_file_bytes(path));
}

}  // namespace tinyeats
