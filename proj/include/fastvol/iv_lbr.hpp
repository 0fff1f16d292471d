#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "fastvol/error.hpp"
#include "fastvol/normal.hpp"
#include "fastvol/pricing.hpp"
#include "fastvol/solver_result.hpp"
#include "fastvol/special/erf.hpp"
#include "fastvol/types.hpp"

namespace fastvol {

/// A quote in normalized Black coordinates: x = ln(F/K) and
/// beta = price e^{rt} / sqrt(FK). After normalize_quote the working quote
/// is an out-of-the-money call (theta = +1, x <= 0).
struct NormalizedQuote {
    int theta = 1;
    double x = 0.0;
    double beta = 0.0;
    double s = std::numeric_limits<double>::quiet_NaN();

    double intrinsic() const {
        const double value = theta * (std::exp(0.5 * x) - std::exp(-0.5 * x));
        return std::max(value, 0.0);
    }
    double b_max() const { return std::exp(0.5 * theta * x); }
};

enum class RegionId { FarLow, NearLow, NearHigh, FarHigh };

enum class ObjectiveBranch { Low, Middle, High };

constexpr ObjectiveBranch branch_of(RegionId region) noexcept {
    switch (region) {
    case RegionId::FarLow: return ObjectiveBranch::Low;
    case RegionId::FarHigh: return ObjectiveBranch::High;
    default: return ObjectiveBranch::Middle;
    }
}

/// Result of normalize_quote: the working quote, the quote as given, and
/// the rejection status when the price lies outside the attainable range.
struct NormalizationResult {
    NormalizedQuote working;
    NormalizedQuote original;
    std::optional<SolverStatus> rejection;
};

namespace detail {

inline constexpr double kLbrBoundTolerance = 1e-15;

// exp(-(h^2 + t^2)/2) with h = x/s, t = s/2, carrying the rounding of x/s
// and of both squares into the exponent.
inline double gaussian_factor(double x, double s) {
    const double h = x / s;
    const double t = 0.5 * s;
    const double hs = h * s;
    const double h_lo = ((x - hs) - two_product_error(h, s, hs)) / s;
    const double hh = h * h;
    const double hh_err = two_product_error(h, h, hh) + 2.0 * h * h_lo;
    const double tt = t * t;
    const double tt_err = two_product_error(t, t, tt);
    const double sum = hh + tt;
    const double sum_err = (hh - (sum - (sum - hh))) + (tt - (sum - hh)) + hh_err + tt_err;
    return std::exp(-0.5 * sum) * (1.0 - 0.5 * sum_err);
}

// Y(z) = Phi(z) / phi(z).
inline double cdf_over_pdf(double z) { return kSqrtHalfPi * special::erfcx(-z * kInvSqrt2Hi); }

// Sum over odd k of Y^(k)(h) t^k / k!; used when Y(h + t) - Y(h - t) cancels.
inline double odd_taylor_sum(double h, double t) {
    constexpr int kMaxOrder = 60;
    const double y0 = cdf_over_pdf(h);
    double ratio[kMaxOrder + 2];
    if (h <= -4.0) {
        // Backward ratios r_n = Y^(n) / Y^(n-1) = n / (-h + r_{n+1}).
        double r = 0.0;
        for (int n = kMaxOrder + 1; n >= 1; --n) {
            r = n / (-h + r);
            ratio[n] = r;
        }
    } else {
        // Forward recurrence Y' = 1 + hY, Y^(n+1) = h Y^(n) + n Y^(n-1).
        double prev = y0;
        double cur = 1.0 + h * y0;
        ratio[1] = cur / y0;
        for (int n = 1; n <= kMaxOrder; ++n) {
            const double next = h * cur + n * prev;
            ratio[n + 1] = next / cur;
            prev = cur;
            cur = next;
        }
    }
    double term = y0;
    double sum = 0.0;
    for (int k = 1; k <= kMaxOrder; ++k) {
        term *= ratio[k] * t / k;
        if (k % 2 == 1) {
            sum += term;
            if (std::fabs(term) <= 1e-17 * std::fabs(sum)) break;
        }
    }
    return 2.0 * sum;
}

// b / b' = Y(h + t) - Y(h - t).
inline double black_over_vega(double x, double s) {
    const double h = x / s;
    const double t = 0.5 * s;
    const double upper = cdf_over_pdf(h + t);
    const double lower = cdf_over_pdf(h - t);
    const double difference = upper - lower;
    if (difference >= upper * 0.03125) return difference;
    return odd_taylor_sum(h, t);
}

inline bool uses_direct_cdf(double x, double s) { return x / s + 0.5 * s > 0.85; }

} // namespace detail

/// Normalized vega db/ds = e^{x/2} phi(x/s + s/2).
inline double normalized_vega(double x, double s) {
    return kInvSqrtTwoPi * detail::gaussian_factor(x, s);
}

/// Normalized call price e^{x/2} Phi(x/s + s/2) - e^{-x/2} Phi(x/s - s/2)
/// for x <= 0. Below the money the price is formed as vega * (b / vega),
/// which keeps full relative accuracy down to the underflow threshold.
inline double normalized_black(double x, double s) {
    if (!(s > 0.0)) throw DomainError("normalized_black: total volatility must be positive");
    if (x > 0.0) throw DomainError("normalized_black: log-moneyness must be non-positive");
    if (std::isinf(s)) return std::exp(0.5 * x);
    if (x == 0.0) return special::erf(0.5 * s * detail::kInvSqrt2Hi);
    if (detail::uses_direct_cdf(x, s)) {
        const double h = x / s;
        const double t = 0.5 * s;
        return std::exp(0.5 * x) * norm_cdf(h + t) - std::exp(-0.5 * x) * norm_cdf(h - t);
    }
    return normalized_vega(x, s) * detail::black_over_vega(x, s);
}

/// b_max - b = e^{x/2} Phi(-x/s - s/2) + e^{-x/2} Phi(x/s - s/2), both terms positive.
inline double complementary_normalized_black(double x, double s) {
    if (!(s > 0.0)) throw DomainError("complementary_normalized_black: total volatility must be positive");
    const double h = x / s;
    const double t = 0.5 * s;
    if (t + h > -1.0 && t - h > -1.0) {
        const double scaled = special::erfcx((t + h) * detail::kInvSqrt2Hi) +
                              special::erfcx((t - h) * detail::kInvSqrt2Hi);
        return 0.5 * detail::gaussian_factor(x, s) * scaled;
    }
    return std::exp(0.5 * x) * norm_cdf(-h - t) + std::exp(-0.5 * x) * norm_cdf(h - t);
}

/// Exact inverse of b(0, s) = 2 Phi(s/2) - 1.
inline double atm_inverse(double beta) {
    if (!(beta > 0.0 && beta < 1.0)) {
        throw DomainError("atm_inverse: normalized price must lie in (0, 1)");
    }
    return 2.0 * inv_norm_cdf_centered(0.5 * beta);
}

/// Maps a market quote to normalized coordinates and reduces it to an
/// out-of-the-money call by put-call parity and the reflection x -> -x.
inline NormalizationResult normalize_quote(OptionFlag flag, double forward, double strike, double t, double r,
                                           double price) {
    detail::check_positive(forward, "forward");
    detail::check_positive(strike, "strike");
    detail::check_positive(t, "time to expiry");
    detail::check_finite(r, "rate");
    detail::check_finite(price, "price");

    NormalizationResult out;
    NormalizedQuote& q = out.original;
    q.theta = flag.theta();
    q.x = std::log(forward / strike);
    q.beta = price * std::exp(r * t) / std::sqrt(forward * strike);

    const double intrinsic = q.intrinsic();
    const double b_max = q.b_max();
    if (q.beta <= intrinsic * (1.0 + detail::kLbrBoundTolerance)) {
        out.rejection = SolverStatus::BelowIntrinsic;
    } else if (q.beta >= b_max * (1.0 - detail::kLbrBoundTolerance)) {
        out.rejection = SolverStatus::AboveUpperBound;
    }

    NormalizedQuote& w = out.working;
    w.theta = 1;
    w.x = -std::fabs(q.x);
    // In the money: strip the intrinsic; the out-of-the-money twin has the same s.
    w.beta = q.beta - intrinsic;
    return out;
}

namespace detail {

struct RegionAnchors {
    double s_low;
    double s_center;
    double s_high;
    double b_low;
    double b_center;
    double b_high;
};

inline constexpr double kAnchorRatio = 0.5;

inline RegionAnchors region_anchors(double x) {
    RegionAnchors a{};
    a.s_center = std::sqrt(2.0 * std::fabs(x));
    a.s_low = a.s_center * kAnchorRatio;
    a.s_high = a.s_center / kAnchorRatio;
    a.b_low = normalized_black(x, a.s_low);
    a.b_center = normalized_black(x, a.s_center);
    a.b_high = normalized_black(x, a.s_high);
    return a;
}

inline RegionId region_of(const RegionAnchors& a, double beta) {
    if (beta < a.b_low) return RegionId::FarLow;
    if (beta < a.b_center) return RegionId::NearLow;
    if (beta < a.b_high) return RegionId::NearHigh;
    return RegionId::FarHigh;
}

// Delbourgo-Gregory rational cubic through (x_l, y_l), (x_r, y_r) with end
// slopes d_l, d_r; r = 3 is the cubic Hermite interpolant.
inline double rational_cubic(double x, double x_l, double x_r, double y_l, double y_r, double d_l, double d_r,
                             double r) {
    const double h = x_r - x_l;
    if (!(h > 0.0)) return 0.5 * (y_l + y_r);
    const double u = (x - x_l) / h;
    const double w = 1.0 - u;
    const double numerator =
        y_r * u * u * u + (r * y_r - h * d_r) * u * u * w + (r * y_l + h * d_l) * u * w * w + y_l * w * w * w;
    return numerator / (1.0 + (r - 3.0) * u * w);
}

// Control parameter that keeps the rational cubic monotone.
inline double monotone_control(double x_l, double x_r, double y_l, double y_r, double d_l, double d_r) {
    const double slope = (y_r - y_l) / (x_r - x_l);
    const double r = (d_l + d_r) / slope;
    if (!std::isfinite(r)) return 1e12;
    return std::clamp(r, 3.0, 1e12);
}

inline double interpolate_monotone(double x, double x_l, double x_r, double y_l, double y_r, double d_l,
                                   double d_r) {
    return rational_cubic(x, x_l, x_r, y_l, y_r, d_l, d_r, monotone_control(x_l, x_r, y_l, y_r, d_l, d_r));
}

// Y'(h) = 1 + h Y(h), by continued fraction where the direct form cancels.
inline double cdf_over_pdf_slope(double h) {
    if (h > -4.0) return 1.0 + h * cdf_over_pdf(h);
    double r = 0.0;
    for (int n = 40; n >= 1; --n) r = n / (-h + r);
    return r * cdf_over_pdf(h);
}

// Surrogate A(s) = e^{-s^2/8} s B(x/s) with B(h) = phi(h) + h Phi(h): the
// normalized price with the odd Taylor series truncated after its first
// term. Exact as s -> 0 and close to b throughout the lower region.
struct LowerSurrogate {
    double log_value;
    double log_slope; // d ln A / ds
};

inline LowerSurrogate lower_surrogate(double x, double s) {
    const double h = x / s;
    const double slope = cdf_over_pdf_slope(h);
    return {std::log(s) - 0.5 * h * h - std::log(kSqrtTwoPi) + std::log(slope) - 0.125 * s * s,
            1.0 / (s * slope) - 0.25 * s};
}

// Solves A(s) = f for s <= s_max: asymptotic start, then two Newton steps in u = |x|/s.
inline double invert_lower_surrogate(double x, double f, double s_max) {
    const double ax = std::fabs(x);
    const double y = f / ax;
    const double u_small = kInvSqrtTwoPi / (y + 0.5);
    double u_large = 0.0;
    const double level = -std::log(y * kSqrtTwoPi);
    if (level > 0.0) {
        double u2 = 2.0 * level;
        for (int k = 0; k < 3 && u2 > 1.0; ++k) u2 = std::max(2.0 * (level - 1.5 * std::log(u2)), 1.0);
        u_large = std::sqrt(u2);
    }
    double s = std::min(ax / std::max(u_small, u_large), s_max);
    const double log_f = std::log(f);
    for (int k = 0; k < 2; ++k) {
        const LowerSurrogate a = lower_surrogate(x, s);
        const double u = ax / s;
        const double next_u = u - (a.log_value - log_f) / (a.log_slope * (-s * s / ax));
        s = next_u > 0.0 ? std::min(ax / next_u, s_max) : std::min(2.0 * s, s_max);
    }
    return s;
}

inline double initial_guess(double x, double beta, RegionId region, const RegionAnchors& a) {
    switch (region) {
    case RegionId::FarLow: {
        // Interpolate the map beta -> A between (0, 0) and the anchor, then invert A.
        const LowerSurrogate anchor = lower_surrogate(x, a.s_low);
        const double f_low = std::exp(anchor.log_value);
        const double slope = f_low * anchor.log_slope / normalized_vega(x, a.s_low);
        double f = interpolate_monotone(beta, 0.0, a.b_low, 0.0, f_low, 1.0, slope);
        if (!(f > 0.0)) f = beta;
        return invert_lower_surrogate(x, std::min(f, f_low), a.s_low);
    }
    case RegionId::NearLow: {
        // s against -1/ln(beta).
        const auto q = [](double b) { return -1.0 / std::log(b); };
        const auto dsdq = [x](double s, double b) {
            const double lb = std::log(b);
            return b * lb * lb / normalized_vega(x, s);
        };
        return interpolate_monotone(q(beta), q(a.b_low), q(a.b_center), a.s_low, a.s_center,
                                    dsdq(a.s_low, a.b_low), dsdq(a.s_center, a.b_center));
    }
    case RegionId::NearHigh: {
        // s against sqrt(-ln(b_max - beta)).
        const double b_max = std::exp(0.5 * x);
        const double c_center = complementary_normalized_black(x, a.s_center);
        const double c_high = complementary_normalized_black(x, a.s_high);
        const auto q = [](double c) { return std::sqrt(-std::log(c)); };
        const auto dsdq = [x, &q](double s, double c) { return 2.0 * q(c) * c / normalized_vega(x, s); };
        return interpolate_monotone(q(b_max - beta), q(c_center), q(c_high), a.s_center, a.s_high,
                                    dsdq(a.s_center, c_center), dsdq(a.s_high, c_high));
    }
    case RegionId::FarHigh: {
        // Interpolate the map beta -> Phi(-s/2), asymptotic to (b_max - b) / (2 cosh(x/2)).
        const double b_max = std::exp(0.5 * x);
        const double f_high = norm_cdf(-0.5 * a.s_high);
        const double slope = -0.5 * norm_pdf(0.5 * a.s_high) / normalized_vega(x, a.s_high);
        const double slope_at_cap = -1.0 / (std::exp(0.5 * x) + std::exp(-0.5 * x));
        const double f = interpolate_monotone(beta, a.b_high, b_max, f_high, 0.0, slope, slope_at_cap);
        if (!(f > 0.0 && f < 0.5)) {
            const double z = inv_norm_cdf(std::clamp((b_max - beta) / (2.0 * b_max), 1e-300, 0.5 - 1e-16));
            return -z + std::sqrt(z * z + 2.0 * std::fabs(x));
        }
        return -2.0 * inv_norm_cdf(std::min(f, f_high));
    }
    }
    return a.s_center;
}

} // namespace detail

/// Region of the working quote (x < 0, beta in (0, b_max)).
inline RegionId select_region(double x, double beta) {
    return detail::region_of(detail::region_anchors(x), beta);
}

/// Starting total volatility for the Householder iteration.
inline double initial_guess(double x, double beta, RegionId region) {
    if (x == 0.0) return atm_inverse(beta);
    return detail::initial_guess(x, beta, region, detail::region_anchors(x));
}

/// Objective value and its first three s-derivatives.
struct ObjectiveValue {
    double g;
    double g1;
    double g2;
    double g3;
    /// True when s lies below the root, i.e. b(x, s) < beta.
    bool below_root;
};

inline ObjectiveValue objective_branch(double x, double s, double beta, RegionId region) {
    if (!(s > 0.0)) throw DomainError("objective_branch: total volatility must be positive");
    const double vega = normalized_vega(x, s);
    const double c2 = x * x / (s * s * s) - 0.25 * s;
    const double c3 = c2 * c2 - 3.0 * x * x / (s * s * s * s) - 0.25;

    switch (branch_of(region)) {
    case ObjectiveBranch::Low: {
        // Derivatives of L = ln b through q_k = b^(k) / b.
        const double ratio = detail::uses_direct_cdf(x, s) ? normalized_black(x, s) / vega
                                                            : detail::black_over_vega(x, s);
        const double log_b = std::log(vega) + std::log(ratio);
        const double q1 = 1.0 / ratio;
        const double q2 = q1 * c2;
        const double q3 = q1 * c3;
        const double l1 = q1;
        const double l2 = q2 - q1 * q1;
        const double l3 = q3 - 3.0 * q1 * q2 + 2.0 * q1 * q1 * q1;
        const double inv = 1.0 / log_b;
        const double inv2 = inv * inv;
        const double log_beta = std::log(beta);
        return ObjectiveValue{
            .g = inv - 1.0 / log_beta,
            .g1 = -l1 * inv2,
            .g2 = -l2 * inv2 + 2.0 * l1 * l1 * inv2 * inv,
            .g3 = -l3 * inv2 + 6.0 * l1 * l2 * inv2 * inv - 6.0 * l1 * l1 * l1 * inv2 * inv2,
            .below_root = log_b < log_beta,
        };
    }
    case ObjectiveBranch::Middle: {
        const double b = normalized_black(x, s);
        return ObjectiveValue{
            .g = b - beta,
            .g1 = vega,
            .g2 = vega * c2,
            .g3 = vega * c3,
            .below_root = b < beta,
        };
    }
    case ObjectiveBranch::High: {
        const double b_max = std::exp(0.5 * x);
        const double complement = complementary_normalized_black(x, s);
        const double target_complement = b_max - beta;
        const double p1 = vega / complement;
        const double p2 = p1 * c2;
        const double p3 = p1 * c3;
        return ObjectiveValue{
            .g = std::log(target_complement / complement),
            .g1 = p1,
            .g2 = p2 + p1 * p1,
            .g3 = p3 + 3.0 * p1 * p2 + 2.0 * p1 * p1 * p1,
            .below_root = complement > target_complement,
        };
    }
    }
    throw DomainError("objective_branch: unknown region");
}

/// Householder update of order three. Returns nothing when g1 = 0 or the
/// step is not finite.
inline std::optional<double> householder3_step(double g, double g1, double g2, double g3) {
    if (g == 0.0) return 0.0;
    if (g1 == 0.0) return std::nullopt;
    const double nu = -g / g1;
    const double eta = g2 / g1;
    const double gamma = g3 / (6.0 * g1);
    const double ds = nu * (1.0 + 0.5 * nu * eta) / (1.0 + nu * (eta + nu * gamma));
    if (!std::isfinite(ds)) return std::nullopt;
    return ds;
}

struct LbrControls {
    int max_iter = 8;
    double tol_s = 1e-14;
};

/// Total volatility s solving b(x, s) = beta for an out-of-the-money call
/// quote (x <= 0, beta in (0, e^{x/2})). `iterations` counts Householder steps.
inline SolverResult implied_normalized_volatility(double x, double beta, const LbrControls& controls = {}) {
    if (x > 0.0 || !std::isfinite(x)) throw DomainError("log-moneyness of the working quote must be <= 0");
    const double b_max = std::exp(0.5 * x);
    if (!(beta > 0.0)) return SolverResult::rejected(SolverStatus::BelowIntrinsic);
    if (beta >= b_max * (1.0 - detail::kLbrBoundTolerance)) return SolverResult::rejected(SolverStatus::AboveUpperBound);

    SolverResult result;
    if (std::fabs(x) < 1e-12) {
        result.sigma = atm_inverse(beta);
        result.status = SolverStatus::Converged;
        result.residual = normalized_black(x, result.sigma) - beta;
        return result;
    }

    const detail::RegionAnchors anchors = detail::region_anchors(x);
    const RegionId region = detail::region_of(anchors, beta);
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    switch (region) {
    case RegionId::FarLow: hi = anchors.s_low; break;
    case RegionId::NearLow: lo = anchors.s_low; hi = anchors.s_center; break;
    case RegionId::NearHigh: lo = anchors.s_center; hi = anchors.s_high; break;
    case RegionId::FarHigh: lo = anchors.s_high; break;
    }
    // A quote on an anchor may round to either side of it.
    lo *= 1.0 - 1e-10;
    hi *= 1.0 + 1e-10;

    double s = detail::initial_guess(x, beta, region, anchors);
    if (!(s > lo && s < hi)) s = std::isinf(hi) ? 2.0 * lo : 0.5 * (lo + hi);

    result.status = SolverStatus::MaxIterations;
    for (int iteration = 1; iteration <= controls.max_iter; ++iteration) {
        const ObjectiveValue value = objective_branch(x, s, beta, region);
        if (value.g == 0.0) {
            result.status = SolverStatus::Converged;
            break;
        }
        if (value.below_root) lo = std::max(lo, s);
        else hi = std::min(hi, s);

        const std::optional<double> step = householder3_step(value.g, value.g1, value.g2, value.g3);
        result.iterations = iteration;
        if (step && std::fabs(*step) <= controls.tol_s * std::max(1.0, s)) {
            s += *step;
            result.status = SolverStatus::Converged;
            break;
        }
        double next = step ? s + *step : std::numeric_limits<double>::quiet_NaN();
        if (!(next > lo && next < hi)) next = std::isinf(hi) ? 2.0 * std::max(s, lo) : 0.5 * (lo + hi);
        s = next;
    }
    result.sigma = s;
    result.residual = normalized_black(x, s) - beta;
    return result;
}

/// Implied volatility through normalized coordinates. Any underlying model
/// applies once its forward is known.
inline SolverResult implied_vol_lbr(double target_price, OptionFlag flag, double forward, double strike, double t,
                                    double r, const LbrControls& controls = {}) {
    if (t == 0.0) {
        // At expiry every volatility prices at intrinsic.
        detail::check_positive(forward, "forward");
        detail::check_positive(strike, "strike");
        detail::check_finite(target_price, "price");
        const double intrinsic = detail::forward_intrinsic(flag, forward, strike);
        return SolverResult::rejected(target_price <= intrinsic * (1.0 + detail::kLbrBoundTolerance)
                                          ? SolverStatus::BelowIntrinsic
                                          : SolverStatus::AboveUpperBound);
    }
    const NormalizationResult quote = normalize_quote(flag, forward, strike, t, r, target_price);
    if (quote.rejection) return SolverResult::rejected(*quote.rejection);
    SolverResult result = implied_normalized_volatility(quote.working.x, quote.working.beta, controls);
    if (result.ok()) result.sigma /= std::sqrt(t);
    return result;
}

/// Convenience overload taking the contract description used by the Halley solver.
inline SolverResult implied_vol_lbr(double target_price, OptionFlag flag, const PricingInputs& contract,
                                    const LbrControls& controls = {}) {
    detail::check_positive(contract.underlying, "underlying");
    return implied_vol_lbr(target_price, flag, contract.forward(), contract.strike, contract.t, contract.r, controls);
}

} // namespace fastvol
