// SPDX-License-Identifier: Apache-2.0

// "TEFW" feature file:
//   'T' 'E' 'F' 'W' | u16 version=1 | u32 window count | u16 rows=15 |
//   u16 cols=65 | f32 payload, row-major per window | u32 CRC-32 (IEEE)
// All integers and floats little-endian. The CRC covers every preceding byte.

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "tinyeats/dsp_frontend.hpp"

namespace tinyeats {

inline constexpr std::uint16_t kFeatureFileVersion = 1;

std::vector<std::uint8_t> encode_feature_file(std::span<const FeatureWindow> windows);

/// Values are stored as float32, so decoded windows equal the originals
/// rounded to single precision.
std::vector<FeatureWindow> decode_feature_file(std::span<const std::uint8_t> bytes);

void save_feature_file(const std::filesystem::path& path, std::span<const FeatureWindow> windows);
std::vector<FeatureWindow> load_feature_file(const std::filesystem::path& path);

}  // namespace tinyeats
