#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "fastvol/error.hpp"
#include "fastvol/normal.hpp"
#include "fastvol/types.hpp"

namespace fastvol {

/// Total volatility sigma*sqrt(t) below which a contract is priced at zero volatility.
inline constexpr double kMinTotalVolatility = 1e-12;

namespace detail {

inline void check_positive(double value, const char* what) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(what) + " must be positive and finite, got " + std::to_string(value));
    }
}

inline void check_non_negative(double value, const char* what) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DomainError(std::string(what) + " must be non-negative and finite, got " + std::to_string(value));
    }
}

inline void check_finite(double value, const char* what) {
    if (!std::isfinite(value)) throw DomainError(std::string(what) + " must be finite");
}

inline void check_contract(double underlying, double strike, double t, double sigma) {
    check_positive(underlying, "underlying");
    check_positive(strike, "strike");
    check_non_negative(t, "time to expiry");
    check_non_negative(sigma, "volatility");
}

/// Undiscounted intrinsic value max(theta (F - K), 0).
inline double forward_intrinsic(OptionFlag flag, double forward, double strike) {
    return std::max(flag.sign() * (forward - strike), 0.0);
}

/// Undiscounted upper bound: F for calls, K for puts.
inline double forward_cap(OptionFlag flag, double forward, double strike) {
    return flag.is_call() ? forward : strike;
}

/// Discounted Black price on a forward; all three models funnel through here.
inline double black_forward_price(OptionFlag flag, double forward, double strike, double total_vol,
                                  double discount) {
    const double intrinsic = forward_intrinsic(flag, forward, strike);
    if (total_vol < kMinTotalVolatility) return discount * intrinsic;
    const double d1 = std::log(forward / strike) / total_vol + 0.5 * total_vol;
    const double d2 = d1 - total_vol;
    // Always evaluate the out-of-the-money side and add intrinsic by parity.
    const double otm = forward < strike ? 1.0 : -1.0;
    const double time_value = otm * (forward * norm_cdf(otm * d1) - strike * norm_cdf(otm * d2));
    const double value = intrinsic + std::max(time_value, 0.0);
    return discount * std::min(value, forward_cap(flag, forward, strike));
}

} // namespace detail

/// Black-76 price of a European option on a forward F.
inline double price_black76(OptionFlag flag, double forward, double strike, double t, double r, double sigma) {
    detail::check_contract(forward, strike, t, sigma);
    detail::check_finite(r, "rate");
    return detail::black_forward_price(flag, forward, strike, sigma * std::sqrt(t), std::exp(-r * t));
}

/// Black-Scholes-Merton price on spot S with continuous dividend yield q.
inline double price_bsm(OptionFlag flag, double spot, double strike, double t, double r, double q, double sigma) {
    detail::check_contract(spot, strike, t, sigma);
    detail::check_finite(r, "rate");
    detail::check_finite(q, "dividend yield");
    const double forward = spot * std::exp((r - q) * t);
    return detail::black_forward_price(flag, forward, strike, sigma * std::sqrt(t), std::exp(-r * t));
}

/// Black-Scholes price on spot S (the q = 0 case of price_bsm).
inline double price_black_scholes(OptionFlag flag, double spot, double strike, double t, double r, double sigma) {
    return price_bsm(flag, spot, strike, t, r, 0.0, sigma);
}

/// Dispatches on inputs.model.
inline double price(OptionFlag flag, const PricingInputs& in) {
    switch (in.model) {
    case Model::Black76: return price_black76(flag, in.underlying, in.strike, in.t, in.r, in.sigma);
    case Model::BlackScholes: return price_black_scholes(flag, in.underlying, in.strike, in.t, in.r, in.sigma);
    case Model::BlackScholesMerton: return price_bsm(flag, in.underlying, in.strike, in.t, in.r, in.q, in.sigma);
    }
    throw DomainError("unknown model");
}

/// Discounted intrinsic value e^{-rt} max(theta (F - K), 0).
inline double discounted_intrinsic(OptionFlag flag, const PricingInputs& in) {
    return in.discount() * detail::forward_intrinsic(flag, in.forward(), in.strike);
}

/// Discounted upper bound: e^{-rt} F for calls, e^{-rt} K for puts.
inline double discounted_cap(OptionFlag flag, const PricingInputs& in) {
    return in.discount() * detail::forward_cap(flag, in.forward(), in.strike);
}

} // namespace fastvol
