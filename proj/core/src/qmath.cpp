// SPDX-License-Identifier: Apache-2.0

#include "tinyeats/qmath.hpp"

#include <cmath>
#include <cstdlib>
#include <string>

#include "tinyeats/errors.hpp"

namespace tinyeats {

Q15 q15_from_real(double x) {
  if (!std::isfinite(x)) throw Error(Errc::kNonFinite, "q15_from_real: non-finite input");
  const double scaled = x * Q15::kOne;
  if (scaled >= Q15::kMax) return Q15{static_cast<std::int16_t>(Q15::kMax)};
  if (scaled <= Q15::kMin) return Q15{static_cast<std::int16_t>(Q15::kMin)};
  // std::round rounds halves away from zero.
  return saturate_q15(static_cast<std::int64_t>(std::round(scaled)));
}

Q15 softsign_q(AccQ15 x) {
  const std::int64_t v = x.raw;
  const std::int64_t mag = v < 0 ? -v : v;
  if (mag >= AccQ15::kActivationLimit) {
    throw Error(Errc::kOverflow, "softsign_q: |x| >= 2^30 (" + std::to_string(x.raw) + ")");
  }
  // C++ integer division truncates toward zero, which keeps the map odd.
  const std::int64_t y = (v * Q15::kOne) / (Q15::kOne + mag);
  return Q15{static_cast<std::int16_t>(y)};
}

Q15 shifted_softsign_q(AccQ15 x) {
  const std::int32_t s = softsign_q(x).raw;
  return Q15{static_cast<std::int16_t>((s + Q15::kOne) >> 1)};
}

Requant requant_from_scale(double scale) {
  if (!std::isfinite(scale) || !(scale > 0.0)) {
    throw Error(Errc::kInvalidArgument, "requant scale must be positive and finite");
  }
  int exp = 0;
  const double frac = std::frexp(scale, &exp);  // scale = frac * 2^exp, frac in [0.5, 1)
  auto mult = static_cast<std::int64_t>(std::llround(std::ldexp(frac, 31)));
  int shift = 31 - exp;
  if (mult == (std::int64_t{1} << 31)) {
    mult >>= 1;
    --shift;
  }
  if (shift < 0 || shift > kRequantShiftMax) {
    throw Error(Errc::kInvalidArgument, "requant scale out of representable range");
  }
  return Requant{static_cast<std::int32_t>(mult), static_cast<std::uint8_t>(shift)};
}

AccQ15 rescale(std::int32_t acc, std::int32_t mult, unsigned shift) {
  if (shift > static_cast<unsigned>(kRequantShiftMax)) {
    throw Error(Errc::kInvalidArgument, "rescale: shift out of range");
  }
  if (mult < kRequantMultMin) {
    throw Error(Errc::kInvalidArgument, "rescale: multiplier out of range");
  }
  const std::int64_t p = std::int64_t{acc} * mult;
  const std::int64_t mag = p < 0 ? -p : p;
  const std::int64_t half = shift == 0 ? 0 : std::int64_t{1} << (shift - 1);
  const std::int64_t q = (mag + half) >> shift;
  const std::int64_t r = p < 0 ? -q : q;
  if (r > std::numeric_limits<std::int32_t>::max() || r < std::numeric_limits<std::int32_t>::min()) {
    throw Error(Errc::kOverflow, "rescale: result exceeds 32 bits");
  }
  return AccQ15{static_cast<std::int32_t>(r)};
}

}  // namespace tinyeats
