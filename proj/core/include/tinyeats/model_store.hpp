// SPDX-License-Identifier: Apache-2.0

// "TEGM" model container, little-endian throughout:
//
//   'T' 'E' 'G' 'M'
//   u16  version (1)
//   u8   kind (0 = float, 1 = quant)
//   u16  input, hidden1, hidden2, fc, classes   (65, 16, 16, 8, 2)
//   f64  norm floor, f64 norm ceil
//   8 tensor blocks in canonical order
//     (gru1 W_r W_z W_h, gru2 W_r W_z W_h, fc, out), each:
//       u16 rows, u16 cols
//       float: rows*cols f64
//       quant: f64 scale, i32 mult, u8 shift, rows*cols i8
//   u32  CRC-32 (IEEE) of all preceding bytes

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tinyeats/grunet.hpp"
#include "tinyeats/quantizer.hpp"

namespace tinyeats {

inline constexpr std::uint16_t kModelVersion = 1;
inline constexpr std::size_t kModelHeaderBytes = 4 + 2 + 1 + 5 * 2 + 2 * 8;

enum class ModelKind : std::uint8_t { kFloat = 0, kQuant = 1 };

using AnyModel = std::variant<FloatModel, QuantModel>;

std::vector<std::uint8_t> encode_model(const FloatModel& m);
/// Throws Error(kBudgetExceeded) if the container would exceed 12288 bytes.
std::vector<std::uint8_t> encode_model(const QuantModel& qm);

/// Validation order: magic, version, kind, dimensions, total size
/// (truncation / trailing bytes), CRC, then tensor blocks. Each failure class
/// has its own Errc.
AnyModel decode_model(std::span<const std::uint8_t> bytes);

std::size_t save_model(const FloatModel& m, const std::filesystem::path& path);
std::size_t save_model(const QuantModel& qm, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);

/// C source declaring the quant container as a byte array (decimal, 12 per
/// line) plus a `<symbol>_len` constant. Throws Error(kInvalidSymbol) unless
/// symbol matches [A-Za-z_][A-Za-z0-9_]*.
std::string export_firmware_array(const QuantModel& qm, std::string_view symbol);

}  // namespace tinyeats
