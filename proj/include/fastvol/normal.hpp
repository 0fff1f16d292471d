#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "fastvol/error.hpp"
#include "fastvol/special/erf.hpp"

namespace fastvol {

inline constexpr double kSqrtTwoPi = 2.506628274631000502415765284811;
inline constexpr double kInvSqrtTwoPi = 0.398942280401432677939946059934;
inline constexpr double kSqrtHalfPi = 1.253314137315500251207882642406;

namespace detail {

// 1/sqrt(2) as an unevaluated sum hi + lo.
inline constexpr double kInvSqrt2Hi = 0.70710678118654757;
inline constexpr double kInvSqrt2Lo = -4.8336466567264567e-17;

// Rounding error of a*b (Dekker), so that a*b == fl(a*b) + result exactly.
inline double two_product_error(double a, double b, double product) {
    constexpr double split = 134217729.0; // 2^27 + 1
    const double ca = split * a;
    const double a_hi = ca - (ca - a);
    const double a_lo = a - a_hi;
    const double cb = split * b;
    const double b_hi = cb - (cb - b);
    const double b_lo = b - b_hi;
    return ((a_hi * b_hi - product) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo;
}

} // namespace detail

/// Standard normal density.
inline double norm_pdf(double x) { return kInvSqrtTwoPi * std::exp(-0.5 * x * x); }

/// Standard normal distribution function, evaluated as erfc(-x/sqrt 2)/2.
///
/// The rounding of -x/sqrt(2) would otherwise be amplified by roughly x^2 in
/// the lower tail; the residual of that division is carried through a first
/// order correction, keeping the relative error near machine precision down
/// to Phi(-37) ~ 6e-300.
inline double norm_cdf(double x) {
    if (std::isnan(x)) return x;
    const double u = -x * detail::kInvSqrt2Hi;
    if (u <= 0.46875) return 0.5 * special::erfc(u);
    const double du = -detail::two_product_error(x, detail::kInvSqrt2Hi, -u) - x * detail::kInvSqrt2Lo;
    const double scaled = special::erfcx(u);
    const double tail = scaled * special::detail::exp_neg_square(u);
    return 0.5 * tail * (1.0 - du * (2.0 * special::detail::kInvSqrtPi) / scaled);
}

/// Phi(x) - 1/2 without cancellation near the median.
inline double norm_cdf_minus_half(double x) { return 0.5 * special::erf(x * detail::kInvSqrt2Hi); }

namespace detail {

// AS241 (Wichura 1988, PPND16), central region |q| <= 0.425 with q = p - 1/2.
inline double as241_central(double q) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
                4.5921953931549871457e4) * r + 1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
             1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
                2.1213794301586595867e4) * r + 5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
             4.2313330701600911252e1) * r + 1.0);
}

// AS241 tails; p is the smaller tail probability, the result is <= 0.
inline double as241_tail(double p) {
    double r = std::sqrt(-std::log(p));
    double value;
    if (r < 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                    3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                  4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                  2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                  5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return -value;
}

// Halley correction x <- x - u/(1 + x u/2), u = (Phi(x) - p)/phi(x).
inline double halley_polish(double x, double residual, double density_ratio) {
    const double u = residual * density_ratio;
    return x - u / (1.0 + 0.5 * x * u);
}

// Inverse for p in (0, 1/2].
inline double inv_norm_cdf_lower(double p) {
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double x = as241_central(q);
        return halley_polish(x, norm_cdf(x) - p, kSqrtTwoPi * std::exp(0.5 * x * x));
    }
    const double x = as241_tail(p);
    const double cdf = norm_cdf(x);
    // 1/phi(x) written as (1/Phi(x)) * Phi(x)/phi(x) to stay finite for denormal p.
    const double mills = kSqrtHalfPi * special::erfcx(-x * kInvSqrt2Hi);
    return halley_polish(x, (cdf - p) / cdf, mills);
}

} // namespace detail

/// Inverse of the standard normal distribution function on (0, 1):
/// an AS241-class rational approximation followed by one Halley step.
inline double inv_norm_cdf(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("inv_norm_cdf: probability must lie in (0, 1), got " + std::to_string(p));
    }
    if (p > 0.5) return -detail::inv_norm_cdf_lower(1.0 - p);
    return detail::inv_norm_cdf_lower(p);
}

/// Solves Phi(x) - 1/2 = q for q in (-1/2, 1/2). Keeps full relative
/// accuracy for tiny |q|, where forming 1/2 + q would round it away.
inline double inv_norm_cdf_centered(double q) {
    if (!(q > -0.5 && q < 0.5)) {
        throw DomainError("inv_norm_cdf_centered: offset must lie in (-1/2, 1/2), got " + std::to_string(q));
    }
    if (std::fabs(q) <= 0.425) {
        const double x = detail::as241_central(q);
        return detail::halley_polish(x, norm_cdf_minus_half(x) - q, kSqrtTwoPi * std::exp(0.5 * x * x));
    }
    const double tail = detail::inv_norm_cdf_lower(0.5 - std::fabs(q));
    return q < 0.0 ? tail : -tail;
}

} // namespace fastvol
