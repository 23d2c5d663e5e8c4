#pragma once

// Rotation-mode CORDIC sine/cosine in Q16.16. Sixteen shift-add
// micro-rotations, no data-dependent loop bounds.

#include <array>
#include <cstddef>
#include <cstdint>

#include "dynprec/qcore.hpp"

namespace dynprec::cordic {

inline constexpr int kIterations = 16;

// round(arctan(2^-i) * 2^16), i = 0..15
inline constexpr std::array<std::int32_t, kIterations> kAtanTable = {
    51472, 30386, 16055, 8150, 4091, 2047, 1024, 512,
    256,   128,   64,    32,   16,   8,    4,    2,
};

inline constexpr std::size_t kAtanTableBytes = kAtanTable.size() * sizeof(kAtanTable[0]);
static_assert(kAtanTableBytes == 64);

inline constexpr std::int32_t kGainInv = 39797;   // 1/K_16 = 0.6072529...
inline constexpr std::int32_t kPi = 205887;
inline constexpr std::int32_t kHalfPi = 102944;
inline constexpr std::int32_t kTwoPi = 411775;

// Angle in radians, Q16.16.
struct AngleQ {
    q::QWord value;

    static constexpr AngleQ from_raw(std::int32_t raw) noexcept { return AngleQ{q::QWord{raw}}; }
    constexpr std::int32_t raw() const noexcept { return value.raw; }
    friend constexpr bool operator==(AngleQ, AngleQ) = default;
};

struct SinCos {
    q::QWord sin;
    q::QWord cos;
};

struct FoldedAngle {
    AngleQ angle;
    bool negate = false;
};

// Reduce modulo kTwoPi into [-kPi, kPi]. Each subtracted period carries the
// 0.03-raw quantization of kTwoPi, so callers with |theta| > 100*pi should
// pre-reduce in higher precision.
AngleQ range_reduce(AngleQ theta) noexcept;

// Map [-kPi, kPi] into [-kHalfPi, kHalfPi] by a +-pi shift. Exactly +-kHalfPi
// is not folded.
FoldedAngle quadrant_fold(AngleQ theta) noexcept;

// Any finite angle. Both outputs are negated when the quadrant fold fires,
// since sin(t +- pi) = -sin(t) and cos(t +- pi) = -cos(t).
SinCos sincos(AngleQ theta) noexcept;

// Number of micro-rotations executed for theta, counted by the kernel itself.
int iteration_count(AngleQ theta) noexcept;

}  // namespace dynprec::cordic
