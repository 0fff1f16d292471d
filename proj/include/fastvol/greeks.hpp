#pragma once

#include <cmath>

#include "fastvol/error.hpp"
#include "fastvol/normal.hpp"
#include "fastvol/pricing.hpp"
#include "fastvol/types.hpp"

namespace fastvol {

/// Reporting conventions. By default theta is per calendar day and vega/rho
/// are per 1% move; `raw` reports plain partial derivatives.
struct GreekScaling {
    double days_per_year = 365.0;
    bool raw = false;

    double theta(double per_year) const { return raw ? per_year : per_year / days_per_year; }
    double per_percent(double per_unit) const { return raw ? per_unit : per_unit / 100.0; }
};

struct GreeksRecord {
    double delta = 0.0;
    double gamma = 0.0;
    double theta = 0.0;
    double rho = 0.0;
    double vega = 0.0;
};

namespace detail {

// Everything the five sensitivities share. For Black76 the "spot" is the
// forward and the carry discount is e^{-rt}; otherwise e^{-qt}.
struct GreekTerms {
    bool forward_model;
    double theta;
    double spot;
    double strike;
    double t;
    double r;
    double carry_rate;
    double sigma;
    double sqrt_t;
    double discount;
    double carry_discount;
    double d1;
    double d2;
    double cdf_d1; // Phi(theta d1)
    double cdf_d2; // Phi(theta d2)
    double pdf_d1;
};

inline void check_greek_inputs(const PricingInputs& in) {
    check_contract(in.underlying, in.strike, in.t, in.sigma);
    check_finite(in.r, "rate");
    check_finite(in.q, "dividend yield");
}

inline GreekTerms greek_terms(OptionFlag flag, const PricingInputs& in) {
    check_greek_inputs(in);
    GreekTerms g{};
    g.forward_model = in.model == Model::Black76;
    g.theta = flag.sign();
    g.spot = in.underlying;
    g.strike = in.strike;
    g.t = in.t;
    g.r = in.r;
    g.carry_rate = g.forward_model ? in.r : in.dividend_yield();
    g.sigma = in.sigma;
    g.sqrt_t = std::sqrt(in.t);
    const double total_vol = in.sigma * g.sqrt_t;
    if (total_vol < kMinTotalVolatility) {
        throw StepFunctionEdge("sensitivity undefined at zero total volatility (sigma*sqrt(t) = " +
                               std::to_string(total_vol) + ")");
    }
    g.discount = std::exp(-in.r * in.t);
    g.carry_discount = std::exp(-g.carry_rate * in.t);
    const double forward = in.forward();
    g.d1 = std::log(forward / in.strike) / total_vol + 0.5 * total_vol;
    g.d2 = g.d1 - total_vol;
    g.cdf_d1 = norm_cdf(g.theta * g.d1);
    g.cdf_d2 = norm_cdf(g.theta * g.d2);
    g.pdf_d1 = norm_pdf(g.d1);
    return g;
}

inline double delta_of(const GreekTerms& g) { return g.theta * g.carry_discount * g.cdf_d1; }

inline double gamma_of(const GreekTerms& g) {
    return g.carry_discount * g.pdf_d1 / (g.spot * g.sigma * g.sqrt_t);
}

// -dV/dt per year. For Black76 this is the spot formula with S -> F, q -> r.
inline double theta_per_year(const GreekTerms& g) {
    const double decay = -g.spot * g.carry_discount * g.pdf_d1 * g.sigma / (2.0 * g.sqrt_t);
    return decay - g.theta * (g.r * g.strike * g.discount * g.cdf_d2 -
                              g.carry_rate * g.spot * g.carry_discount * g.cdf_d1);
}

// dV/dr per unit rate.
inline double rho_per_unit(const GreekTerms& g) {
    if (g.forward_model) {
        const double value = g.discount * g.theta * (g.spot * g.cdf_d1 - g.strike * g.cdf_d2);
        return -g.t * value;
    }
    return g.theta * g.strike * g.t * g.discount * g.cdf_d2;
}

// dV/dsigma per unit volatility.
inline double vega_per_unit(const GreekTerms& g) { return g.spot * g.carry_discount * g.pdf_d1 * g.sqrt_t; }

} // namespace detail

/// dV/dS (dV/dF under Black76). At zero total volatility the limit is
/// returned when the contract is strictly in or out of the money.
inline double delta(OptionFlag flag, const PricingInputs& in) {
    detail::check_greek_inputs(in);
    if (in.sigma * std::sqrt(in.t) < kMinTotalVolatility) {
        const double forward = in.forward();
        if (forward == in.strike) {
            throw StepFunctionEdge("delta undefined at the strike with zero total volatility");
        }
        const double carry = in.model == Model::Black76 ? in.r : in.dividend_yield();
        const bool in_the_money = flag.sign() * (forward - in.strike) > 0.0;
        return in_the_money ? flag.sign() * std::exp(-carry * in.t) : 0.0;
    }
    return detail::delta_of(detail::greek_terms(flag, in));
}

inline double gamma(const PricingInputs& in) {
    return detail::gamma_of(detail::greek_terms(OptionFlag::call(), in));
}

inline double theta(OptionFlag flag, const PricingInputs& in, GreekScaling scaling = {}) {
    return scaling.theta(detail::theta_per_year(detail::greek_terms(flag, in)));
}

inline double rho(OptionFlag flag, const PricingInputs& in, GreekScaling scaling = {}) {
    return scaling.per_percent(detail::rho_per_unit(detail::greek_terms(flag, in)));
}

inline double vega(const PricingInputs& in, GreekScaling scaling = {}) {
    return scaling.per_percent(detail::vega_per_unit(detail::greek_terms(OptionFlag::call(), in)));
}

/// All five Greeks from one evaluation of d1, d2 and the normal terms.
/// Bit-identical to the individual functions.
inline GreeksRecord all_greeks(OptionFlag flag, const PricingInputs& in, GreekScaling scaling = {}) {
    const detail::GreekTerms g = detail::greek_terms(flag, in);
    return GreeksRecord{
        .delta = detail::delta_of(g),
        .gamma = detail::gamma_of(g),
        .theta = scaling.theta(detail::theta_per_year(g)),
        .rho = scaling.per_percent(detail::rho_per_unit(g)),
        .vega = scaling.per_percent(detail::vega_per_unit(g)),
    };
}

} // namespace fastvol
