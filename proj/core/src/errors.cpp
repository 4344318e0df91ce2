// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/errors.hpp"

namespace tinyeats {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::kInvalidArgument: return "invalid argument";
    case Errc::kWrongRate: return "wrong sample rate";
    case Errc::kEmptySignal: return "empty signal";
    case Errc::kNonFinite: return "non-finite value";
    case Errc::kWrongLength: return "wrong length";
    case Errc::kDimensionMismatch: return "dimension mismatch";
    case Errc::kOverflow: return "accumulator overflow";
    case Errc::kClassAbsent: return "class absent";
    case Errc::kEmptySplit: return "empty split";
    case Errc::kNonFiniteLoss: return "non-finite loss";
    case Errc::kInsufficientExamples: return "insufficient examples";
    case Errc::kBudgetExceeded: return "size budget exceeded";
    case Errc::kInvalidSymbol: return "invalid symbol";
    case Errc::kIo: return "I/O failure";
    case Errc::kBadMagic: return "bad magic";
    case Errc::kUnsupportedVersion: return "unsupported version";
    case Errc::kBadKind: return "bad model kind";
    case Errc::kCrcMismatch: return "CRC mismatch";
    case Errc::kTruncated: return "truncated data";
    case Errc::kTrailingBytes: return "trailing bytes";
    case Errc::kInvalidPayload: return "invalid payload";
    case Errc::kNotRiff: return "not a RIFF/WAVE file";
    case Errc::kNotPcm: return "not PCM";
    case Errc::kNotMono: return "not mono";
    case Errc::kUnsupportedDepth: return "unsupported bit depth";
    case Errc::kMalformedWav: return "malformed WAV";
    case Errc::kManifestParse: return "manifest parse error";
    case Errc::kMissingFile: return "missing file";
  }
  return "unknown";
}

}  // namespace tinyeats
