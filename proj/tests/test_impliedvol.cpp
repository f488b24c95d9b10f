#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "smalltime/asymptotics.hpp"
#include "smalltime/impliedvol.hpp"

using namespace smalltime;

TEST(AtmPrice, Examples) {
    EXPECT_EQ(atm_price_bs(100.0, 0.0, 1.0), 0.0);
    // 100 (2 Phi(0.1) - 1) with Phi(0.1) = 0.5398278373 from the erf series.
    EXPECT_NEAR(atm_price_bs(100.0, 0.2, 1.0), 100.0 * (2.0 * 0.5398278373 - 1.0), 1e-8);
    EXPECT_NEAR(atm_price_bs(100.0, 0.2, 1.0), 7.9656, 1e-4);
    EXPECT_EQ(atm_price_bs(100.0, std::numeric_limits<double>::infinity(), 1.0), 100.0);
    EXPECT_NEAR(atm_price_bs(100.0, 1e4, 1.0), 100.0, 1e-12);
}

TEST(AtmPrice, IncreasingInSigma) {
    double prev = -1.0;
    for (int i = 0; i <= 2000; ++i) {
        const double p = atm_price_bs(50.0, i * 0.005, 0.3);
        EXPECT_GT(p, prev);
        EXPECT_LT(p, 50.0);
        prev = p;
    }
}

TEST(AtmPrice, Errors) {
    EXPECT_THROW(atm_price_bs(0.0, 0.2, 1.0), Error);
    EXPECT_THROW(atm_price_bs(1.0, -0.2, 1.0), Error);
    EXPECT_THROW(atm_price_bs(1.0, 0.2, 0.0), Error);
}

TEST(ImpliedVol, Examples) {
    const auto zero = atm_implied_vol(0.0, 100.0, 1.0);
    EXPECT_EQ(zero.sigma_impl, 0.0);
    EXPECT_FALSE(zero.infinite);
    EXPECT_NEAR(atm_implied_vol(atm_price_bs(100.0, 0.2, 1.0), 100.0, 1.0).sigma_impl, 0.2, 1e-10);
    EXPECT_NEAR(atm_implied_vol(7.9656, 100.0, 1.0).sigma_impl, 0.2, 1e-5);
    EXPECT_TRUE(atm_implied_vol(100.0, 100.0, 1.0).infinite);
}

TEST(ImpliedVol, OutOfRange) {
    for (double price : {-1e-12, 100.0 + 1e-9}) {
        try {
            atm_implied_vol(price, 100.0, 1.0);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::PriceOutOfRange);
        }
    }
}

TEST(ImpliedVol, RoundTripOnRandomCases) {
    std::mt19937_64 eng(99);
    std::uniform_real_distribution<double> s0(1.0, 200.0), sig(0.01, 3.0), logt(std::log(1e-4), std::log(5.0));
    for (int i = 0; i < 1000; ++i) {
        const double s = s0(eng), sigma = sig(eng), t = std::exp(logt(eng));
        const auto r = atm_implied_vol(atm_price_bs(s, sigma, t), s, t);
        EXPECT_NEAR(r.sigma_impl / sigma, 1.0, 1e-9) << s << " " << sigma << " " << t;
        EXPECT_LE(std::abs(r.residual), 1e-12 * s);
    }
}

TEST(ImpliedVol, TinySigmaSqrtT) {
    // sigma sqrt(T) ~ 1e-8: the erf form keeps full relative accuracy.
    const double t = std::ldexp(1.0, -40);
    const auto r = atm_implied_vol(atm_price_bs(1.0, 0.01, t), 1.0, t);
    EXPECT_NEAR(r.sigma_impl / 0.01, 1.0, 1e-9);
}

TEST(ImpliedVol, LeadingPriceMatchesAsymptote) {
    const std::vector<ModelSpec> models = {
        ModelSpec(FrozenLevy{1.0, 0.0, JumpSpec(CompoundPoisson{{{0.5, 1.0}, {-0.5, 1.0}}})}),
        ModelSpec(FrozenLevy{2.0, 0.0, JumpSpec(Stable{1.5, 1.0, 1.0, std::nullopt})}),
        ModelSpec(FrozenLevy{1.0, 0.0, JumpSpec(Nig{std::numbers::pi})}),
        ModelSpec(Heston{100.0, 0.04, 1.0, 0.04, 0.5, -0.7}),
    };
    for (const auto& m : models) {
        const auto res = classify(m);
        const auto asym = implied_vol_asymptote(m);
        double prev_gap = std::numeric_limits<double>::infinity();
        for (int k = 8; k <= 20; ++k) {
            const double t = std::ldexp(1.0, -k);
            const double iv = atm_implied_vol(leading_price(res, t), m.s0(), t).sigma_impl;
            const double gap = std::abs(iv / asym(t) - 1.0);
            EXPECT_LE(gap, prev_gap + 1e-12) << m.type_name() << " k=" << k;
            prev_gap = gap;
        }
        EXPECT_LT(prev_gap, 0.02) << m.type_name();
    }
}
