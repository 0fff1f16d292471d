#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "fastvol/normal.hpp"
#include "fastvol/pricing.hpp"
#include "fastvol/solver_result.hpp"
#include "fastvol/types.hpp"

namespace fastvol {

struct HalleyControls {
    /// Price tolerance; non-positive selects 1e-12 * max(1, upper bound).
    double tol_price = 0.0;
    double tol_sigma = 1e-12;
    int max_halley = 16;
    int max_bisect = 128;
    double sigma_low = 1e-9;
    double sigma_high = 10.0;
    double sigma_ceiling = 100.0;
};

namespace detail {

// Price residual and its first two sigma-derivatives for a fixed contract.
class HalleyObjective {
public:
    HalleyObjective(OptionFlag flag, double forward, double strike, double t, double discount, double target)
        : flag_(flag), forward_(forward), strike_(strike), sqrt_t_(std::sqrt(t)), discount_(discount),
          target_(target) {}

    struct Point {
        double f;
        double vega;
        double vomma;
        double noise; // rounding level of f
    };

    double residual(double sigma) const {
        return black_forward_price(flag_, forward_, strike_, sigma * sqrt_t_, discount_) - target_;
    }

    Point evaluate(double sigma) const {
        const double total_vol = sigma * sqrt_t_;
        const double f = black_forward_price(flag_, forward_, strike_, total_vol, discount_) - target_;
        const double eps = std::numeric_limits<double>::epsilon();
        if (total_vol < kMinTotalVolatility) return {f, 0.0, 0.0, 4.0 * eps * std::fabs(target_)};
        const double d1 = std::log(forward_ / strike_) / total_vol + 0.5 * total_vol;
        const double d2 = d1 - total_vol;
        const double vega = discount_ * forward_ * norm_pdf(d1) * sqrt_t_;
        // The time value is a difference of two terms of this size.
        const double otm = forward_ < strike_ ? 1.0 : -1.0;
        const double terms = discount_ * (forward_ * norm_cdf(otm * d1) + strike_ * norm_cdf(otm * d2));
        return {f, vega, vega * d1 * d2 / sigma, 4.0 * eps * (std::fabs(target_) + terms)};
    }

private:
    OptionFlag flag_;
    double forward_;
    double strike_;
    double sqrt_t_;
    double discount_;
    double target_;
};

inline double halley_step(double f, double d1f, double d2f) {
    return -2.0 * f * d1f / (2.0 * d1f * d1f - f * d2f);
}

} // namespace detail

/// Implied volatility by safeguarded Halley iteration on the price.
///
/// The root is kept inside a bracket that starts at [sigma_low, sigma_high]
/// and may grow to sigma_ceiling. A Halley step is rejected in favour of
/// bisection when it is not finite, leaves the bracket or fails to reduce
/// |price - target|. `contract.sigma` is ignored.
inline SolverResult implied_vol_halley(double target, OptionFlag flag, const PricingInputs& contract,
                                       const HalleyControls& controls = {}) {
    detail::check_finite(target, "target price");
    detail::check_contract(contract.underlying, contract.strike, contract.t, 0.0);
    detail::check_finite(contract.r, "rate");
    detail::check_finite(contract.q, "dividend yield");

    const double forward = contract.forward();
    const double discount = contract.discount();
    const double intrinsic = discount * detail::forward_intrinsic(flag, forward, contract.strike);
    const double cap = discount * detail::forward_cap(flag, forward, contract.strike);
    const double tol_price = controls.tol_price > 0.0 ? controls.tol_price : 1e-12 * std::max(1.0, cap);

    if (target <= intrinsic + tol_price) return SolverResult::rejected(SolverStatus::BelowIntrinsic);
    if (target > cap + tol_price || contract.t == 0.0) {
        return SolverResult::rejected(SolverStatus::AboveUpperBound);
    }

    const detail::HalleyObjective objective(flag, forward, contract.strike, contract.t, discount, target);
    const double sqrt_t = std::sqrt(contract.t);

    double lo = controls.sigma_low;
    double hi = controls.sigma_high;
    if (objective.residual(lo) > 0.0) {
        // Root below sigma_low: the zero-volatility price is the intrinsic, which lies below target.
        lo = 0.5 * kMinTotalVolatility / sqrt_t;
    }
    double f_hi = objective.residual(hi);
    while (f_hi < 0.0 && hi < controls.sigma_ceiling) {
        hi = std::min(2.0 * hi, controls.sigma_ceiling);
        f_hi = objective.residual(hi);
    }
    if (f_hi < 0.0) return SolverResult::rejected(SolverStatus::MaxIterations);

    const double underlying = contract.model == Model::Black76 ? forward : contract.underlying;
    double sigma = std::clamp(std::sqrt(2.0 * M_PI / contract.t) * target / underlying, 0.05, 2.0);
    sigma = std::clamp(sigma, lo, hi);

    SolverResult result;
    int halley_steps = 0;
    int bisect_steps = 0;
    detail::HalleyObjective::Point point = objective.evaluate(sigma);

    while (true) {
        if (point.f == 0.0) break;
        if (point.f < 0.0) lo = sigma;
        else hi = sigma;
        if (hi - lo <= controls.tol_sigma * std::max(1.0, sigma)) break;

        if (halley_steps < controls.max_halley) {
            ++halley_steps;
            const double step = detail::halley_step(point.f, point.vega, point.vomma);
            const double candidate = sigma + step;
            if (std::isfinite(step) && candidate > lo && candidate < hi) {
                const detail::HalleyObjective::Point next = objective.evaluate(candidate);
                if (std::fabs(step) <= controls.tol_sigma * std::max(1.0, candidate)) {
                    sigma = candidate;
                    point = next;
                    break;
                }
                if (std::fabs(next.f) < std::fabs(point.f)) {
                    sigma = candidate;
                    point = next;
                    continue;
                }
                // No progress left at the rounding level of the price.
                if (std::fabs(point.f) <= point.noise) break;
                if (next.f < 0.0) lo = std::max(lo, candidate);
                else hi = std::min(hi, candidate);
            }
        }

        if (bisect_steps >= controls.max_bisect) break;
        ++bisect_steps;
        sigma = 0.5 * (lo + hi);
        point = objective.evaluate(sigma);
    }

    result.sigma = sigma;
    result.iterations = halley_steps + bisect_steps;
    result.residual = point.f;
    // A budget-exhausted iterate still counts when its residual is within tolerance.
    if (std::fabs(point.f) <= tol_price) {
        result.status = bisect_steps > 0 ? SolverStatus::FellBackToBisection : SolverStatus::Converged;
    } else {
        result.status = SolverStatus::MaxIterations;
    }
    return result;
}

} // namespace fastvol
