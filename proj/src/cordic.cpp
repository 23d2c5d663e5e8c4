#include "dynprec/cordic.hpp"

namespace dynprec::cordic {

namespace {

template <typename OnIteration>
SinCos rotate(AngleQ theta, OnIteration&& on_iteration) noexcept {
    const FoldedAngle folded = quadrant_fold(range_reduce(theta));

    std::int32_t x = kGainInv;
    std::int32_t y = 0;
    std::int32_t z = folded.angle.raw();

    for (int i = 0; i < kIterations; ++i) {
        const std::int32_t d = (z >= 0) ? 1 : -1;
        const std::int32_t x_next = x - d * (y >> i);
        const std::int32_t y_next = y + d * (x >> i);
        z -= d * kAtanTable[static_cast<std::size_t>(i)];
        x = x_next;
        y = y_next;
        on_iteration();
    }

    if (folded.negate) {
        x = -x;
        y = -y;
    }
    return SinCos{q::QWord{y}, q::QWord{x}};
}

}  // namespace

AngleQ range_reduce(AngleQ theta) noexcept {
    std::int32_t r = theta.raw() % kTwoPi;
    if (r > kPi) {
        r -= kTwoPi;
    } else if (r < -kPi) {
        r += kTwoPi;
    }
    return AngleQ::from_raw(r);
}

FoldedAngle quadrant_fold(AngleQ theta) noexcept {
    std::int32_t t = theta.raw();
    if (t > kHalfPi) {
        return FoldedAngle{AngleQ::from_raw(t - kPi), true};
    }
    if (t < -kHalfPi) {
        return FoldedAngle{AngleQ::from_raw(t + kPi), true};
    }
    return FoldedAngle{theta, false};
}

SinCos sincos(AngleQ theta) noexcept {
    return rotate(theta, [] {});
}

int iteration_count(AngleQ theta) noexcept {
    int count = 0;
    rotate(theta, [&count] { ++count; });
    return count;
}

}  // namespace dynprec::cordic
