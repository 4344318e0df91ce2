// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>

namespace tinyeats {

// CRC-32 with the IEEE 802.3 polynomial (same as zlib / PNG / gzip).
std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes);

}  // namespace tinyeats
