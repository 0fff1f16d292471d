#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fastvol/greeks.hpp"
#include "fastvol/pricing.hpp"

namespace fastvol::testing {

/// Contract with standardized moneyness z = ln(F/K)/(sigma sqrt t) in [-z_max, z_max].
inline PricingInputs random_contract(std::mt19937_64& rng, Model model, double z_max = 3.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    PricingInputs in;
    in.model = model;
    in.underlying = 100.0;
    in.t = 0.05 + 2.95 * u(rng);
    in.r = -0.01 + 0.07 * u(rng);
    in.q = model == Model::BlackScholesMerton ? 0.03 * u(rng) : 0.0;
    in.sigma = 0.05 + 0.95 * u(rng);
    const double z = z_max * (2.0 * u(rng) - 1.0);
    in.strike = in.forward() * std::exp(-z * in.sigma * std::sqrt(in.t));
    return in;
}

/// Central difference with step 1e-5 max(1, |p|), plus the rounding floor it
/// cannot resolve below.
struct Difference {
    double value;
    double floor;
};

template <class F>
Difference central_difference(const PricingInputs& in, double PricingInputs::*field, F&& fn) {
    const double p = in.*field;
    const double h = 1e-5 * std::max(1.0, std::fabs(p));
    PricingInputs up = in;
    PricingInputs down = in;
    up.*field = p + h;
    down.*field = p - h;
    const double a = fn(up);
    const double b = fn(down);
    const double floor = 64.0 * std::numeric_limits<double>::epsilon() * (std::fabs(a) + std::fabs(b)) / (2.0 * h);
    return {(a - b) / (2.0 * h), floor};
}

/// Unscaled Greeks by finite differences: price for delta, theta, rho and vega;
/// delta for gamma.
struct FiniteDifferenceGreeks {
    Difference delta, gamma, theta, rho, vega;
};

inline FiniteDifferenceGreeks finite_difference_greeks(OptionFlag flag, const PricingInputs& in) {
    auto value = [flag](const PricingInputs& p) { return price(flag, p); };
    auto first = [flag](const PricingInputs& p) { return delta(flag, p); };
    FiniteDifferenceGreeks out;
    out.delta = central_difference(in, &PricingInputs::underlying, value);
    out.gamma = central_difference(in, &PricingInputs::underlying, first);
    out.theta = central_difference(in, &PricingInputs::t, value);
    out.theta.value = -out.theta.value;
    out.rho = central_difference(in, &PricingInputs::r, value);
    out.vega = central_difference(in, &PricingInputs::sigma, value);
    return out;
}

inline bool matches(double analytic, const Difference& fd, double rel_tol = 1e-6) {
    return std::fabs(analytic - fd.value) <= rel_tol * std::fabs(analytic) + fd.floor;
}

} // namespace fastvol::testing
