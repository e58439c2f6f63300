#pragma once

// 32-bit arithmetic with RV32IM/F semantics. MiniKernel adopts the same
// rules so that interpreted and simulated results agree bit for bit.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace warpbench::arith {

inline std::int32_t div(std::int32_t a, std::int32_t b) {
  if (b == 0) return -1;
  if (a == std::numeric_limits<std::int32_t>::min() && b == -1) return a;
  return a / b;
}

inline std::int32_t rem(std::int32_t a, std::int32_t b) {
  if (b == 0) return a;
  if (a == std::numeric_limits<std::int32_t>::min() && b == -1) return 0;
  return a % b;
}

inline std::uint32_t divu(std::uint32_t a, std::uint32_t b) { return b == 0 ? 0xFFFFFFFFu : a / b; }
inline std::uint32_t remu(std::uint32_t a, std::uint32_t b) { return b == 0 ? a : a % b; }

inline std::int32_t add(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) + static_cast<std::uint32_t>(b));
}
inline std::int32_t sub(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) - static_cast<std::uint32_t>(b));
}
inline std::int32_t mul(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) * static_cast<std::uint32_t>(b));
}
inline std::int32_t shl(std::int32_t a, std::int32_t b) {
  return static_cast<std::int32_t>(static_cast<std::uint32_t>(a) << (static_cast<std::uint32_t>(b) & 31u));
}
inline std::int32_t sra(std::int32_t a, std::int32_t b) { return a >> (static_cast<std::uint32_t>(b) & 31u); }

// fcvt.w.s with round-toward-zero; saturates, NaN maps to INT32_MAX.
inline std::int32_t f32_to_i32(float f) {
  if (std::isnan(f)) return std::numeric_limits<std::int32_t>::max();
  if (f >= 2147483648.0f) return std::numeric_limits<std::int32_t>::max();
  if (f < -2147483648.0f) return std::numeric_limits<std::int32_t>::min();
  return static_cast<std::int32_t>(f);
}

inline float bits_to_f32(std::uint32_t b) { return std::bit_cast<float>(b); }
inline std::uint32_t f32_to_bits(float f) { return std::bit_cast<std::uint32_t>(f); }

}  // namespace warpbench::arith
