#include <gtest/gtest.h>

#include <cmath>

#include "pmtk/core.hpp"
#include "pmtk/rng.hpp"

using namespace pmtk;

namespace {
constexpr double kLn9 = 2.1972245773362196;  // ln(0.9/0.1)
}

TEST(Likelihood, SymmetryPoint) { EXPECT_DOUBLE_EQ(to_likelihood(Probability(0.5)), 1.0); }

TEST(Likelihood, HighPrice) { EXPECT_NEAR(to_likelihood(Probability(0.9)), 9.0, 1e-12); }

TEST(Likelihood, ClampedAtOne) {
    const double delta = 1e-6;
    EXPECT_NEAR(to_likelihood(Probability(1.0)), (1.0 - delta) / delta, 1e-4);
    EXPECT_NEAR(to_likelihood(Probability(1.0)), 999999.0, 1e-3);
    EXPECT_TRUE(std::isfinite(to_likelihood(Probability(0.0))));
    EXPECT_GT(to_likelihood(Probability(0.0)), 0.0);
}

TEST(LogLikelihood, Examples) {
    EXPECT_EQ(to_log_likelihood(Probability(0.5)).value(), 0.0);
    EXPECT_NEAR(to_log_likelihood(Probability(0.9)).value(), kLn9, 1e-12);
    EXPECT_NEAR(to_log_likelihood(Probability(0.1)).value(),
                -to_log_likelihood(Probability(0.9)).value(), 1e-12);
}

TEST(LogLikelihood, InverseExamples) {
    EXPECT_DOUBLE_EQ(from_log_likelihood(0.0).value(), 0.5);
    EXPECT_NEAR(from_log_likelihood(std::log(9.0)).value(), 0.9, 1e-12);
    const double rt = from_log_likelihood(to_log_likelihood(Probability(0.3))).value();
    EXPECT_NEAR(rt, 0.3, 1e-12);
}

TEST(LogLikelihood, PropertiesOnRandomPrices) {
    SplitMix64 rng(2024);
    const double delta = kDefaultClamp;
    double prev_p = delta, prev_ll = to_log_likelihood(Probability(prev_p)).value();
    for (int i = 0; i < 2000; ++i) {
        const double p = delta + (1.0 - 2 * delta) * rng.next_double();
        const double ll = to_log_likelihood(Probability(p)).value();
        // antisymmetry
        EXPECT_NEAR(to_log_likelihood(Probability(1.0 - p)).value(), -ll, 1e-12);
        // round trip
        EXPECT_NEAR(from_log_likelihood(ll).value(), p, 1e-12);
        // monotonicity against the previous draw
        if (p > prev_p) EXPECT_GT(ll, prev_ll);
        if (p < prev_p) EXPECT_LT(ll, prev_ll);
        prev_p = p;
        prev_ll = ll;
    }
}

TEST(NormalizePrices, Examples) {
    const double raw[] = {0.2, 0.2, 0.1};
    const auto probs = normalize_prices(raw);
    ASSERT_EQ(probs.size(), 3u);
    EXPECT_NEAR(probs[0].value(), 0.4, 1e-12);
    EXPECT_NEAR(probs[1].value(), 0.4, 1e-12);
    EXPECT_NEAR(probs[2].value(), 0.2, 1e-12);

    const double one[] = {1.0};
    EXPECT_DOUBLE_EQ(normalize_prices(one)[0].value(), 1.0);

    const double zeros[] = {0.0, 0.0};
    EXPECT_THROW(normalize_prices(zeros), AllZeroError);
    EXPECT_THROW(normalize_prices(std::span<const double>{}), AllZeroError);
}

TEST(NormalizePrices, SumsToOne) {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> raw;
        const int n = 1 + static_cast<int>(rng.next() % 8);
        for (int i = 0; i < n; ++i) raw.push_back(rng.next_double() * 3.0);
        raw[rng.next() % n] += 0.1;  // at least one strictly positive
        double sum = 0.0;
        for (const auto& p : normalize_prices(raw)) sum += p.value();
        EXPECT_NEAR(sum, 1.0, 1e-12);
    }
}

TEST(LogScore, Examples) {
    const Probability certain[] = {Probability(1.0)};
    EXPECT_EQ(log_score(certain, 0), 0.0);

    const Probability even[] = {Probability(0.5), Probability(0.5)};
    EXPECT_NEAR(log_score(even, 0), -0.6931471805599453, 1e-12);

    const Probability quarters[] = {Probability(0.25), Probability(0.25), Probability(0.25),
                                    Probability(0.25)};
    EXPECT_NEAR(log_score(quarters, 2), -1.3862943611198906, 1e-12);

    EXPECT_THROW(log_score(even, 2), std::out_of_range);
}

TEST(LogScore, NonPositiveAndZeroOnlyAtCertainty) {
    SplitMix64 rng(99);
    for (int i = 0; i < 500; ++i) {
        const double p = rng.next_double();
        const Probability probs[] = {Probability(p), Probability(1.0 - p)};
        const double s = log_score(probs, 0);
        EXPECT_LE(s, 0.0);
        if (p < 1.0) EXPECT_LT(s, 0.0);
    }
    const Probability zero[] = {Probability(0.0)};
    EXPECT_TRUE(std::isfinite(log_score(zero, 0)));
}

TEST(Probability, BoundsEnforced) {
    EXPECT_THROW(Probability(-0.1), std::domain_error);
    EXPECT_THROW(Probability(1.1), std::domain_error);
    EXPECT_NO_THROW(Probability(0.0));
    EXPECT_NO_THROW(Probability(1.0));
}

TEST(Market, WinnerIndex) {
    Market market;
    market.market_id = "m";
    CandidateSeries a, b;
    a.candidate_id = "a";
    a.outcome = Outcome::Lost;
    b.candidate_id = "b";
    b.outcome = Outcome::Won;
    market.candidates = {a, b};
    EXPECT_EQ(winner_index(market), 1u);

    market.candidates[0].outcome = Outcome::Won;
    EXPECT_THROW(winner_index(market), NoWinnerError);
    market.candidates = {a};
    EXPECT_NO_THROW(validate_market_winner(market));  // lone candidate, implied complement
}
