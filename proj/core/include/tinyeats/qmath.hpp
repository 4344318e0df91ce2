// SPDX-License-Identifier: Apache-2.0

// Q15 fixed-point kernels for the integer inference path.
//
// Q15:    16-bit signed, value = raw / 32768, range [-1, 1 - 2^-15].
// AccQ15: 32-bit signed on the same scale, used for pre-activations after
//         the per-tensor rescale. |raw| must stay below 2^30 before it is
//         fed to an activation.
//
// Everything here is integer-only. The single exception is q15_from_real,
// which is the host-side entry point that converts real features.

#pragma once

#include <cstdint>
#include <limits>

namespace tinyeats {

struct Q15 {
  std::int16_t raw = 0;

  static constexpr std::int32_t kOne = 32768;
  static constexpr std::int32_t kMax = std::numeric_limits<std::int16_t>::max();
  static constexpr std::int32_t kMin = std::numeric_limits<std::int16_t>::min();

  friend constexpr bool operator==(Q15, Q15) = default;
};

struct AccQ15 {
  std::int32_t raw = 0;

  static constexpr std::int32_t kActivationLimit = std::int32_t{1} << 30;

  friend constexpr bool operator==(AccQ15, AccQ15) = default;
};

constexpr Q15 saturate_q15(std::int64_t v) {
  if (v > Q15::kMax) return Q15{static_cast<std::int16_t>(Q15::kMax)};
  if (v < Q15::kMin) return Q15{static_cast<std::int16_t>(Q15::kMin)};
  return Q15{static_cast<std::int16_t>(v)};
}

/// Round half away from zero of x * 32768, clamped. Throws on non-finite x.
Q15 q15_from_real(double x);

/// (a*b + 2^14) >> 15, saturated. Only -1 * -1 saturates.
constexpr Q15 q15_mul(Q15 a, Q15 b) {
  const std::int32_t p = std::int32_t{a.raw} * std::int32_t{b.raw};
  return saturate_q15((std::int64_t{p} + 16384) >> 15);
}

/// Gate times a wide value: (g*v + 2^14) >> 15, kept at 32 bits. Used for
/// z * (h_prev - h~), whose difference spans (-2, 2) and does not fit Q15.
constexpr AccQ15 q15_mul_wide(Q15 gate, AccQ15 value) {
  const std::int64_t p = std::int64_t{gate.raw} * value.raw;
  return AccQ15{static_cast<std::int32_t>((p + 16384) >> 15)};
}

constexpr Q15 q15_add_sat(Q15 a, Q15 b) { return saturate_q15(std::int32_t{a.raw} + b.raw); }

/// x / (1 + |x|) on the Q15 scale: (x * 32768) / (32768 + |x|), truncated
/// toward zero. Throws Error(kOverflow) when |x.raw| >= 2^30.
Q15 softsign_q(AccQ15 x);

/// (softsign_q(x) + 32768) >> 1, in [0, 32767].
Q15 shifted_softsign_q(AccQ15 x);

/// Integer form of a positive real scale: scale ~= mult * 2^-shift with
/// mult in [2^29, 2^31).
struct Requant {
  std::int32_t mult = std::int32_t{1} << 30;
  std::uint8_t shift = 30;

  friend constexpr bool operator==(Requant, Requant) = default;
};

inline constexpr std::int32_t kRequantMultMin = std::int32_t{1} << 29;
inline constexpr int kRequantShiftMax = 62;

/// Host-side: derive (mult, shift) for a real scale. Throws if the scale is
/// not positive/finite or cannot be represented with shift in [0, 62].
Requant requant_from_scale(double scale);

/// Round-half-away-from-zero of acc * mult / 2^shift with a 64-bit
/// intermediate. Throws Error(kInvalidArgument) for shift > 62 or mult out of
/// range and Error(kOverflow) if the result does not fit 32 bits.
AccQ15 rescale(std::int32_t acc, std::int32_t mult, unsigned shift);

inline AccQ15 rescale(std::int32_t acc, Requant rq) { return rescale(acc, rq.mult, rq.shift); }

}  // namespace tinyeats
