#pragma once

#include <cmath>

namespace lvp {

// exp/log2 built from IEEE add/mul/div, floor, frexp and ldexp only.
// libm transcendentals are deterministic within one binary but not across
// libc versions; probability reconstruction in the decoder cannot depend on
// that, so the codec uses these fixed polynomial evaluations everywhere.

inline double det_exp(double x) {
    constexpr double kInvLn2 = 1.4426950408889634074;
    constexpr double kLn2Hi = 6.93147180369123816490e-01;
    constexpr double kLn2Lo = 1.90821492927058770002e-10;
    if (x < -745.0) return 0.0;
    if (x > 709.78) return HUGE_VAL;

    double k = std::floor(x * kInvLn2 + 0.5);
    double r = (x - k * kLn2Hi) - k * kLn2Lo;

    // Taylor series to r^13; |r| <= ln2/2 keeps the truncation near 4e-18.
    double p = 1.0 / 6227020800.0; // 1/13!
    p = p * r + 1.0 / 479001600.0;
    p = p * r + 1.0 / 39916800.0;
    p = p * r + 1.0 / 3628800.0;
    p = p * r + 1.0 / 362880.0;
    p = p * r + 1.0 / 40320.0;
    p = p * r + 1.0 / 5040.0;
    p = p * r + 1.0 / 720.0;
    p = p * r + 1.0 / 120.0;
    p = p * r + 1.0 / 24.0;
    p = p * r + 1.0 / 6.0;
    p = p * r + 0.5;
    p = p * r + 1.0;
    p = p * r + 1.0;
    return std::ldexp(p, static_cast<int>(k));
}

inline double det_log2(double x) {
    constexpr double kLog2E = 1.4426950408889634074;
    constexpr double kSqrtHalf = 0.70710678118654752440;
    if (x <= 0.0) return -HUGE_VAL;

    int e = 0;
    double m = std::frexp(x, &e); // m in [0.5, 1)
    if (m < kSqrtHalf) {
        m *= 2.0;
        e -= 1;
    }

    // atanh series: ln(m) = 2s(1 + z/3 + z^2/5 + ...), s = (m-1)/(m+1).
    double s = (m - 1.0) / (m + 1.0);
    double z = s * s;
    double t = 1.0 / 23.0;
    t = t * z + 1.0 / 21.0;
    t = t * z + 1.0 / 19.0;
    t = t * z + 1.0 / 17.0;
    t = t * z + 1.0 / 15.0;
    t = t * z + 1.0 / 13.0;
    t = t * z + 1.0 / 11.0;
    t = t * z + 1.0 / 9.0;
    t = t * z + 1.0 / 7.0;
    t = t * z + 1.0 / 5.0;
    t = t * z + 1.0 / 3.0;
    t = t * z + 1.0;
    return static_cast<double>(e) + (2.0 * s * t) * kLog2E;
}

} // namespace lvp
