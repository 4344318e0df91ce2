// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tinyeats {

/// Every failure the library reports carries one of these codes, so callers
/// (and the CLI exit-code mapping) can tell error classes apart without
/// parsing messages.
enum class Errc {
  kInvalidArgument,
  kWrongRate,
  kEmptySignal,
  kNonFinite,
  kWrongLength,
  kDimensionMismatch,
  kOverflow,
  kClassAbsent,
  kEmptySplit,
  kNonFiniteLoss,
  kInsufficientExamples,
  kBudgetExceeded,
  kInvalidSymbol,
  // model / feature containers
  kIo,
  kBadMagic,
  kUnsupportedVersion,
  kBadKind,
  kCrcMismatch,
  kTruncated,
  kTrailingBytes,
  kInvalidPayload,
  // WAV ingestion
  kNotRiff,
  kNotPcm,
  kNotMono,
  kUnsupportedDepth,
  kMalformedWav,
  // manifests
  kManifestParse,
  kMissingFile,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

/// True for codes that signal a broken internal invariant rather than bad
/// input data.
constexpr bool is_invariant_violation(Errc code) {
  return code == Errc::kOverflow || code == Errc::kNonFiniteLoss;
}

}  // namespace tinyeats
