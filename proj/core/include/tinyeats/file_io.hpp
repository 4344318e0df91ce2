// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace tinyeats {

/// Whole-file binary read; throws Error(kIo) if the file cannot be opened.
std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

/// Whole-file binary write (truncating); throws Error(kIo) on failure.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace tinyeats
