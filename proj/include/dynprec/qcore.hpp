#pragma once

// =============================================================================
// Q16.16 scalar core
// =============================================================================
//
// A QWord stores a real number as a 32-bit two's-complement word with 16
// fractional bits: value = raw / 2^16, range [-32768, 32767.9999847],
// resolution 2^-16.
//
// Overflow is signalled through Flags rather than exceptions. Every function
// here is pure and safe to call concurrently.
//
// Right shifts of negative values are arithmetic (floor division by 2^16).
// This is guaranteed by C++20 and relied on throughout.

#include <cmath>
#include <cstdint>
#include <limits>

namespace dynprec::q {

inline constexpr int kFracBits = 16;
inline constexpr std::int64_t kOne = std::int64_t{1} << kFracBits;
inline constexpr double kResolution = 1.0 / 65536.0;
inline constexpr std::int32_t kRawMax = std::numeric_limits<std::int32_t>::max();
inline constexpr std::int32_t kRawMin = std::numeric_limits<std::int32_t>::min();

struct QWord {
    std::int32_t raw = 0;

    static constexpr QWord from_raw(std::int32_t r) noexcept { return QWord{r}; }
    friend constexpr bool operator==(QWord, QWord) = default;
};

// 64-bit product of two QWords at scale 2^32, before the shift correction.
struct QProduct {
    std::int64_t raw = 0;
};

// Bitmask of conditions raised by an operation. Callers OR these together
// across a pipeline and inspect once at the end.
enum class Flag : std::uint8_t {
    none = 0,
    overflow = 1 << 0,  // wrapping result differs from the exact result
    clamp = 1 << 1,     // saturating variant clamped
    range = 1 << 2,     // real input outside the representable range
};

struct Flags {
    std::uint8_t bits = 0;

    constexpr void raise(Flag f) noexcept { bits |= static_cast<std::uint8_t>(f); }
    constexpr bool has(Flag f) const noexcept { return (bits & static_cast<std::uint8_t>(f)) != 0; }
    constexpr bool any() const noexcept { return bits != 0; }
    constexpr Flags& operator|=(Flags o) noexcept {
        bits |= o.bits;
        return *this;
    }
    friend constexpr bool operator==(Flags, Flags) = default;
};

namespace detail {

constexpr std::int32_t wrap32(std::int64_t v) noexcept {
    return static_cast<std::int32_t>(v);  // modular since C++20
}

constexpr bool fits32(std::int64_t v) noexcept { return v >= kRawMin && v <= kRawMax; }

constexpr std::int32_t clamp32(std::int64_t v) noexcept {
    if (v > kRawMax) return kRawMax;
    if (v < kRawMin) return kRawMin;
    return static_cast<std::int32_t>(v);
}

}  // namespace detail

// =============================================================================
// Conversions (pipeline boundaries only)
// =============================================================================

// Round to nearest, ties away from zero. Out-of-range or NaN input saturates
// (NaN maps to 0) and raises Flag::range.
inline QWord from_real(double v, Flags& flags) noexcept {
    if (std::isnan(v)) {
        flags.raise(Flag::range);
        return QWord{0};
    }
    const double scaled = std::round(v * static_cast<double>(kOne));
    if (scaled > static_cast<double>(kRawMax)) {
        flags.raise(Flag::range);
        return QWord{kRawMax};
    }
    if (scaled < static_cast<double>(kRawMin)) {
        flags.raise(Flag::range);
        return QWord{kRawMin};
    }
    return QWord{static_cast<std::int32_t>(scaled)};
}

inline QWord from_real(double v) noexcept {
    Flags ignored;
    return from_real(v, ignored);
}

// Exact: every QWord is representable in a double.
constexpr double to_real(QWord q) noexcept { return static_cast<double>(q.raw) / static_cast<double>(kOne); }

// =============================================================================
// Add / subtract
// =============================================================================

constexpr QWord add(QWord a, QWord b) noexcept {
    return QWord{detail::wrap32(std::int64_t{a.raw} + b.raw)};
}

constexpr QWord add(QWord a, QWord b, Flags& flags) noexcept {
    const std::int64_t exact = std::int64_t{a.raw} + b.raw;
    if (!detail::fits32(exact)) flags.raise(Flag::overflow);
    return QWord{detail::wrap32(exact)};
}

constexpr QWord sub(QWord a, QWord b) noexcept {
    return QWord{detail::wrap32(std::int64_t{a.raw} - b.raw)};
}

constexpr QWord sub(QWord a, QWord b, Flags& flags) noexcept {
    const std::int64_t exact = std::int64_t{a.raw} - b.raw;
    if (!detail::fits32(exact)) flags.raise(Flag::overflow);
    return QWord{detail::wrap32(exact)};
}

constexpr QWord add_sat(QWord a, QWord b, Flags& flags) noexcept {
    const std::int64_t exact = std::int64_t{a.raw} + b.raw;
    if (!detail::fits32(exact)) flags.raise(Flag::clamp);
    return QWord{detail::clamp32(exact)};
}

constexpr QWord add_sat(QWord a, QWord b) noexcept {
    Flags ignored;
    return add_sat(a, b, ignored);
}

constexpr QWord sub_sat(QWord a, QWord b, Flags& flags) noexcept {
    const std::int64_t exact = std::int64_t{a.raw} - b.raw;
    if (!detail::fits32(exact)) flags.raise(Flag::clamp);
    return QWord{detail::clamp32(exact)};
}

constexpr QWord sub_sat(QWord a, QWord b) noexcept {
    Flags ignored;
    return sub_sat(a, b, ignored);
}

// =============================================================================
// Multiply
// =============================================================================

constexpr QProduct wide_mul(QWord a, QWord b) noexcept {
    return QProduct{std::int64_t{a.raw} * std::int64_t{b.raw}};
}

// Floor variant: one arithmetic >> 16 on the 64-bit product. Error against the
// exact product lies in (-2^-16, 0]. A result outside 32 bits wraps silently;
// use mul_sat for unconstrained operands.
constexpr QWord mul(QWord a, QWord b) noexcept {
    return QWord{detail::wrap32(wide_mul(a, b).raw >> kFracBits)};
}

// Round-to-nearest variant, |error| <= 2^-17. Ties round toward +inf.
constexpr QWord mul_rounded(QWord a, QWord b) noexcept {
    return QWord{detail::wrap32((wide_mul(a, b).raw + (kOne >> 1)) >> kFracBits)};
}

constexpr QWord mul_sat(QWord a, QWord b, Flags& flags) noexcept {
    const std::int64_t shifted = wide_mul(a, b).raw >> kFracBits;
    if (!detail::fits32(shifted)) flags.raise(Flag::clamp);
    return QWord{detail::clamp32(shifted)};
}

constexpr QWord mul_sat(QWord a, QWord b) noexcept {
    Flags ignored;
    return mul_sat(a, b, ignored);
}

}  // namespace dynprec::q
