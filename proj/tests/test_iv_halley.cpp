#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fastvol/iv_halley.hpp"
#include "grids.hpp"
#include "test_util.hpp"

using namespace fastvol;
using namespace fastvol::testing;

namespace {

const OptionFlag kCall = OptionFlag::call();
const OptionFlag kPut = OptionFlag::put();

const PricingInputs kListing{Model::BlackScholes, 100, 100, 0.25, 0.05, 0.0, 0.0};

// Miss that no double-precision solver can avoid: the quote is within the
// intrinsic tie tolerance, or sigma is below the price's resolution.
bool explained_miss(const HalleyCase& c, const SolverResult& r) {
    if (r.status == SolverStatus::BelowIntrinsic) return within_tie(c);
    return r.ok() && std::fabs(r.sigma - c.in.sigma) <= 1e-8 * c.in.sigma + 2.0 * sigma_resolution(c);
}

} // namespace

TEST(Halley, ListingRoundTrip) {
    const SolverResult exact = implied_vol_halley(4.614997129602865369573106, kCall, kListing);
    ASSERT_TRUE(exact.ok());
    EXPECT_NEAR(exact.sigma, 0.2, 1e-10);
    EXPECT_LE(std::fabs(exact.residual), 1e-12 * 100.0);

    // The five-digit quote is 7e-6 below the exact price; vega is 19.6.
    const SolverResult rounded = implied_vol_halley(4.61499, kCall, kListing);
    ASSERT_TRUE(rounded.ok());
    EXPECT_NEAR(rounded.sigma, 0.2, 5e-7);
}

TEST(Halley, IntrinsicTargetIsBelowIntrinsic) {
    PricingInputs in{Model::Black76, 120, 100, 1.0, 0.03, 0.0, 0.0};
    const double intrinsic = discounted_intrinsic(kCall, in);
    const SolverResult r = implied_vol_halley(intrinsic, kCall, in);
    EXPECT_EQ(r.status, SolverStatus::BelowIntrinsic);
    EXPECT_TRUE(std::isnan(r.sigma));
    EXPECT_EQ(implied_vol_halley(intrinsic - 1.0, kCall, in).status, SolverStatus::BelowIntrinsic);
    EXPECT_EQ(implied_vol_halley(0.0, kPut, in).status, SolverStatus::BelowIntrinsic);
}

TEST(Halley, AboveCapIsRejected) {
    PricingInputs in{Model::BlackScholes, 100, 90, 1.0, 0.03, 0.0, 0.0};
    const SolverResult r = implied_vol_halley(1.2 * discounted_cap(kCall, in), kCall, in);
    EXPECT_EQ(r.status, SolverStatus::AboveUpperBound);
    EXPECT_TRUE(std::isnan(r.sigma));
}

TEST(Halley, ExpiredContractIsRejected) {
    PricingInputs in{Model::BlackScholes, 100, 90, 0.0, 0.03, 0.0, 0.0};
    EXPECT_EQ(implied_vol_halley(10.0, kCall, in).status, SolverStatus::BelowIntrinsic);
    EXPECT_EQ(implied_vol_halley(12.0, kCall, in).status, SolverStatus::AboveUpperBound);
}

TEST(Halley, InvalidContractThrows) {
    EXPECT_THROW(implied_vol_halley(1.0, kCall, PricingInputs{Model::BlackScholes, 100, -1, 1, 0, 0, 0}), DomainError);
    EXPECT_THROW(implied_vol_halley(NAN, kCall, kListing), DomainError);
}

TEST(Halley, StepFormula) {
    // Newton when the curvature vanishes.
    EXPECT_DOUBLE_EQ(detail::halley_step(0.5, 2.0, 0.0), -0.25);
    EXPECT_EQ(detail::halley_step(0.0, 2.0, 1.0), 0.0);
    // f = x^2 - 2 at x = 1.5: 1.5 - 1.5 / 17.5.
    EXPECT_NEAR(1.5 + detail::halley_step(0.25, 3.0, 2.0), 1.4142857142857143, 1e-15);
}

TEST(Halley, BudgetExhaustionIsReported) {
    HalleyControls tight;
    tight.max_halley = 0;
    tight.max_bisect = 3;
    const SolverResult r = implied_vol_halley(4.614997129602865, kCall, kListing, tight);
    EXPECT_EQ(r.status, SolverStatus::MaxIterations);
    EXPECT_TRUE(std::isfinite(r.sigma));
    EXPECT_FALSE(r.ok());
}

TEST(Halley, RoundTripGrid) {
    int admissible = 0;
    int exact = 0;
    for (const HalleyCase& c : halley_grid()) {
        if (!c.admissible) continue;
        ++admissible;
        const SolverResult r = implied_vol_halley(c.price, c.flag, c.in);
        if (r.ok()) {
            ASSERT_TRUE(std::isfinite(r.sigma));
        }
        const bool within = r.ok() && std::fabs(r.sigma - c.in.sigma) <= 1e-8 * c.in.sigma;
        if (within) {
            ++exact;
            continue;
        }
        EXPECT_TRUE(explained_miss(c, r)) << to_string(c.in.model) << ' ' << c.flag.to_char() << " x=" << c.x
                                          << " t=" << c.in.t << " r=" << c.in.r << " sigma=" << c.in.sigma
                                          << " got " << r.sigma << " status " << to_string(r.status);
    }
    EXPECT_GT(admissible, 2500);
    EXPECT_GE(exact, admissible * 97 / 100);
}

TEST(Halley, WellConditionedQuotesAreExact) {
    for (const HalleyCase& c : halley_grid()) {
        if (!c.admissible || sigma_resolution(c) > 1e-10 * c.in.sigma) continue;
        const SolverResult r = implied_vol_halley(c.price, c.flag, c.in);
        ASSERT_TRUE(r.ok());
        EXPECT_LE(std::fabs(r.sigma - c.in.sigma), 1e-8 * c.in.sigma);
    }
}

TEST(Halley, AgreesWithBisectionOracle) {
    for (const HalleyCase& c : halley_grid()) {
        if (!c.admissible) continue;
        const SolverResult r = implied_vol_halley(c.price, c.flag, c.in);
        if (!r.ok()) continue;
        const double oracle = bisection_oracle(c.price, c.flag, c.in);
        EXPECT_LE(std::fabs(r.sigma - oracle), 1e-9 + 2.0 * sigma_resolution(c))
            << "x=" << c.x << " sigma=" << c.in.sigma;
    }
}

TEST(Halley, DeterministicAndResidualBounded) {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        PricingInputs in{static_cast<Model>(i % 3), 100, 100 * std::exp(u(rng) - 0.5), 0.05 + 2 * u(rng), 0.03, 0.01,
                         0.05 + u(rng)};
        const OptionFlag flag = i % 2 ? kCall : kPut;
        const double target = price(flag, in);
        const SolverResult a = implied_vol_halley(target, flag, in);
        const SolverResult b = implied_vol_halley(target, flag, in);
        ASSERT_TRUE(same_bits(a.sigma, b.sigma));
        if (succeeded(a.status)) {
            ASSERT_TRUE(std::isfinite(a.sigma));
            ASSERT_LE(std::fabs(a.residual), 1e-12 * std::max(1.0, discounted_cap(flag, in)));
        }
    }
}

TEST(SolverStatus, NamesRoundTrip) {
    for (SolverStatus s : {SolverStatus::Converged, SolverStatus::FellBackToBisection, SolverStatus::BelowIntrinsic,
                           SolverStatus::AboveUpperBound, SolverStatus::MaxIterations}) {
        EXPECT_EQ(parse_status(to_string(s)), s);
    }
    EXPECT_EQ(static_cast<int>(SolverStatus::Converged), 0);
    EXPECT_EQ(static_cast<int>(SolverStatus::MaxIterations), 4);
    EXPECT_FALSE(parse_status("bogus").has_value());
}
