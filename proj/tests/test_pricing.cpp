#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fastvol/pricing.hpp"
#include "test_util.hpp"

using namespace fastvol;
using fastvol::testing::rel_err;
using fastvol::testing::same_bits;

namespace {

const OptionFlag kCall = OptionFlag::call();
const OptionFlag kPut = OptionFlag::put();

struct RandomContract {
    double underlying, strike, t, r, q, sigma;
};

RandomContract draw(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    RandomContract c;
    c.underlying = 100.0;
    c.strike = 100.0 * std::exp(-1.5 + 3.0 * u(rng));
    c.t = 0.01 + 4.99 * u(rng);
    c.r = -0.02 + 0.12 * u(rng);
    c.q = -0.02 + 0.08 * u(rng);
    c.sigma = 0.01 + 1.99 * u(rng);
    return c;
}

} // namespace

TEST(OptionFlag, ParsesOnlyFourTokens) {
    EXPECT_EQ(OptionFlag::parse("c"), kCall);
    EXPECT_EQ(OptionFlag::parse("C"), kCall);
    EXPECT_EQ(OptionFlag::parse("p"), kPut);
    EXPECT_EQ(OptionFlag::parse("P"), kPut);
    for (const char* bad : {"", "x", "call", "cc", " c", "1"}) {
        EXPECT_THROW(OptionFlag::parse(bad), DomainError) << "'" << bad << "'";
    }
    EXPECT_EQ(kCall.theta(), 1);
    EXPECT_EQ(kPut.theta(), -1);
}

TEST(Model, NamesRoundTrip) {
    for (Model m : {Model::Black76, Model::BlackScholes, Model::BlackScholesMerton}) {
        EXPECT_EQ(parse_model(to_string(m)), m);
    }
    EXPECT_THROW(parse_model("heston"), DomainError);
}

TEST(Black76, FrozenValues) {
    EXPECT_LE(rel_err(price_black76(kCall, 100, 100, 1, 0, 0.2), 7.965567455405796293080924), 1e-14);
    EXPECT_EQ(price_black76(kCall, 100, 80, 1, 0, 0.0), 20.0);
    EXPECT_EQ(price_black76(kPut, 100, 80, 1, 0, 0.0), 0.0);
}

TEST(Black76, AtmIdentity) {
    for (double sigma : {0.01, 0.2, 0.7, 2.5}) {
        const double expected = 100.0 * (2.0 * norm_cdf(0.5 * sigma) - 1.0);
        EXPECT_LE(rel_err(price_black76(kCall, 100, 100, 1, 0, sigma), expected), 1e-13);
    }
}

TEST(BlackScholes, FrozenValues) {
    struct Case {
        OptionFlag flag;
        double strike;
        double value;
    };
    const Case cases[] = {
        {kCall, 95, 7.714369430203551265636688}, {kPut, 95, 1.534260477122286932027436},
        {kCall, 100, 4.614997129602865369573106}, {kPut, 100, 3.372777178991008176300209},
        {kCall, 105, 2.477901874073254719751286}, {kPut, 105, 6.173570925930804666814745},
    };
    for (const Case& c : cases) {
        EXPECT_LE(rel_err(price_black_scholes(c.flag, 100, c.strike, 0.25, 0.05, 0.2), c.value), 1e-14)
            << c.flag.to_char() << " K=" << c.strike;
    }
}

TEST(BlackScholes, ExpiryPayoff) {
    EXPECT_EQ(price_black_scholes(kCall, 100, 90, 0.0, 0.05, 0.3), 10.0);
    EXPECT_EQ(price_black_scholes(kPut, 100, 90, 0.0, 0.05, 0.3), 0.0);
    EXPECT_EQ(price_black_scholes(kPut, 100, 110, 0.0, 0.05, 0.3), 10.0);
}

TEST(Bsm, FrozenValues) {
    EXPECT_LE(rel_err(price_bsm(kCall, 100, 100, 1, 0.05, 0.05, 0.2), 7.577082146427272509413122), 1e-14);
}

TEST(Bsm, DeepInTheMoneyLimit) {
    EXPECT_NEAR(price_bsm(kCall, 100, 1e-8, 1, 0.03, 0.02, 0.25), 100.0 * std::exp(-0.02), 1e-6);
}

TEST(Bsm, ZeroYieldIsBlackScholesBitForBit) {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 5000; ++i) {
        const RandomContract c = draw(rng);
        for (OptionFlag flag : {kCall, kPut}) {
            ASSERT_TRUE(same_bits(price_bsm(flag, c.underlying, c.strike, c.t, c.r, 0.0, c.sigma),
                                  price_black_scholes(flag, c.underlying, c.strike, c.t, c.r, c.sigma)));
        }
    }
}

TEST(Pricing, RejectsInvalidContracts) {
    EXPECT_THROW(price_black76(kCall, 0, 100, 1, 0, 0.2), DomainError);
    EXPECT_THROW(price_black76(kCall, 100, -1, 1, 0, 0.2), DomainError);
    EXPECT_THROW(price_black76(kCall, 100, 100, -1, 0, 0.2), DomainError);
    EXPECT_THROW(price_black76(kCall, 100, 100, 1, 0, -0.2), DomainError);
    EXPECT_THROW(price_black_scholes(kCall, 100, 100, 1, NAN, 0.2), DomainError);
}

TEST(Pricing, TinyTotalVolatilityIsIntrinsic) {
    EXPECT_EQ(price_black76(kCall, 100, 80, 1e-30, 0.0, 0.2), 20.0);
    EXPECT_EQ(price_black76(kPut, 100, 120, 1.0, 0.0, 1e-13), 20.0);
    EXPECT_FALSE(std::isnan(price_black76(kCall, 100, 100, 1.0, 0.0, 0.0)));
}

class PricingProperties : public ::testing::TestWithParam<Model> {};

TEST_P(PricingProperties, ParityBoundsAndMonotonicity) {
    const Model model = GetParam();
    std::mt19937_64 rng(static_cast<unsigned>(model) + 17);
    for (int i = 0; i < 10000; ++i) {
        const RandomContract c = draw(rng);
        const PricingInputs in{model, c.underlying, c.strike, c.t, c.r, c.q, c.sigma};
        const double forward = in.forward();
        const double call = price(kCall, in);
        const double put = price(kPut, in);
        ASSERT_LE(std::fabs((call - put) - in.discount() * (forward - c.strike)), 1e-12 * (forward + c.strike));

        for (OptionFlag flag : {kCall, kPut}) {
            const double v = flag.is_call() ? call : put;
            ASSERT_GE(v, discounted_intrinsic(flag, in));
            ASSERT_LE(v, discounted_cap(flag, in));
            PricingInputs higher = in;
            higher.sigma = c.sigma * 1.01;
            ASSERT_GE(price(flag, higher), v);
        }
    }
}

TEST_P(PricingProperties, StrictlyIncreasingInsideBounds) {
    const Model model = GetParam();
    PricingInputs in{model, 100, 110, 1.0, 0.02, 0.01, 0.0};
    double previous = -1.0;
    for (double sigma = 0.05; sigma < 3.0; sigma += 0.05) {
        in.sigma = sigma;
        const double v = price(kCall, in);
        EXPECT_GT(v, previous) << "sigma = " << sigma;
        previous = v;
    }
}

namespace fastvol {
// Readable parameter values in test listings.
void PrintTo(Model model, std::ostream* os) { *os << to_string(model); }
} // namespace fastvol

INSTANTIATE_TEST_SUITE_P(AllModels, PricingProperties,
                         ::testing::Values(Model::Black76, Model::BlackScholes, Model::BlackScholesMerton),
                         [](const auto& info) { return std::string(to_string(info.param)); });
