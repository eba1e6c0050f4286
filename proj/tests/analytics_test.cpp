#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "pmtk/analytics.hpp"
#include "pmtk/rng.hpp"
#include "pmtk/simulate.hpp"
#include "test_support.hpp"

using namespace pmtk;
using testsup::make_series;

namespace {

Market single(const CandidateSeries& series) { return Market{series.market_id, {series}}; }

/// Deterministic standard normal via Box-Muller on SplitMix64.
double next_normal(SplitMix64& rng) {
    double u = 0.0;
    while (u == 0.0) u = rng.next_double();
    const double v = rng.next_double();
    return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

}  // namespace

TEST(LogScoreCurve, PerfectForecastScoresZero) {
    const auto market = single(make_series("m", "c", Outcome::Won, {1.0, 1.0, 1.0}));
    const auto curve = average_log_score_curve({market});
    ASSERT_EQ(curve.points.size(), 3u);
    for (const auto& pt : curve.points) {
        EXPECT_EQ(pt.mean_score, 0.0);
        EXPECT_EQ(pt.num_markets, 1);
    }
}

TEST(LogScoreCurve, EvenTwoCandidateMarket) {
    Market market;
    market.market_id = "m";
    market.candidates = {make_series("m", "a", Outcome::Won, {0.5, 0.5, 0.5}),
                         make_series("m", "b", Outcome::Lost, {0.5, 0.5, 0.5})};
    const auto curve = average_log_score_curve({market});
    ASSERT_EQ(curve.points.size(), 3u);
    for (const auto& pt : curve.points) EXPECT_NEAR(pt.mean_score, -0.6931471805599453, 1e-12);
}

TEST(LogScoreCurve, ShorterMarketsJoinLate) {
    const auto m3 = single(make_series("m3", "c", Outcome::Won, {0.5, 0.6, 1.0}));
    const auto m5 = single(make_series("m5", "c", Outcome::Lost, {0.5, 0.5, 0.4, 0.2, 0.0}));
    const auto curve = average_log_score_curve({m3, m5});
    ASSERT_EQ(curve.points.size(), 5u);
    std::map<int, int> counts;
    for (const auto& pt : curve.points) counts[pt.day_offset] = pt.num_markets;
    EXPECT_EQ(counts[-4], 1);
    EXPECT_EQ(counts[-3], 1);
    EXPECT_EQ(counts[-2], 2);
    EXPECT_EQ(counts[-1], 2);
    EXPECT_EQ(counts[0], 2);
    // lost single-candidate market scores the implied complement
    EXPECT_EQ(curve.points.back().mean_score, 0.0);  // ln(1) for both at offset 0
}

TEST(LogScoreCurve, SkipsDaysMissingFromAMarket) {
    auto gappy = make_series("g", "c", Outcome::Won, {0.5, 0.6, 1.0});
    gappy.points[1].day_offset = -1;
    gappy.points.erase(gappy.points.begin());  // offsets -1, 0
    gappy.points.insert(gappy.points.begin(), PricePoint{-3, Probability(0.5)});
    // offsets now -3, -1, 0 with a gap at -2
    const auto full = single(make_series("f", "c", Outcome::Won, {0.5, 0.5, 0.5, 0.5}));
    const auto curve = average_log_score_curve({single(gappy), full});
    std::map<int, int> counts;
    for (const auto& pt : curve.points) counts[pt.day_offset] = pt.num_markets;
    EXPECT_EQ(counts[-3], 2);
    EXPECT_EQ(counts[-2], 1);  // gappy market missing
    EXPECT_EQ(counts[-1], 2);
}

TEST(LogScoreCurve, ErrorsPropagate) {
    Market no_winner;
    no_winner.market_id = "m";
    no_winner.candidates = {make_series("m", "a", Outcome::Lost, {0.5}),
                            make_series("m", "b", Outcome::Lost, {0.5})};
    EXPECT_THROW(average_log_score_curve({no_winner}), NoWinnerError);

    Market zeros;
    zeros.market_id = "z";
    zeros.candidates = {make_series("z", "a", Outcome::Won, {0.0}),
                        make_series("z", "b", Outcome::Lost, {0.0})};
    EXPECT_THROW(average_log_score_curve({zeros}), AllZeroError);

    auto unaligned = make_series("u", "c", Outcome::Won, {0.5, 0.6});
    for (auto& pt : unaligned.points) pt.day_offset += 3;
    EXPECT_THROW(average_log_score_curve({single(unaligned)}), std::invalid_argument);
}

TEST(EpsilonSamples, DailyChangeExamples) {
    const auto market = single(make_series("m", "c", Outcome::Won, {0.5, 0.9}));
    const auto samples = epsilon_samples({market});
    ASSERT_EQ(samples.size(), 1u);
    EXPECT_NEAR(samples[0].value, 2.1972245773362196, 1e-12);
    EXPECT_EQ(samples[0].outcome, Outcome::Won);
    EXPECT_EQ(samples[0].day_offset, 0);

    const auto flat = single(make_series("m", "c", Outcome::Lost, {0.3, 0.3, 0.3}));
    for (const auto& s : epsilon_samples({flat})) EXPECT_EQ(s.value, 0.0);
}

TEST(EpsilonSamples, GapRule) {
    auto series = make_series("m", "c", Outcome::Won, {0.5, 0.6});
    series.points[0].day_offset = -3;  // offsets -3, 0: a two-day gap
    EXPECT_TRUE(epsilon_samples({single(series)}).empty());
    EXPECT_EQ(epsilon_samples({single(series)}, /*include_gap_crossings=*/true).size(), 1u);
}

TEST(EmpiricalDensity, UniformSamplesIntegrateToOne) {
    SplitMix64 rng(314159);
    std::vector<double> values(100001);
    for (auto& v : values) v = rng.next_double();
    const auto est = empirical_density(values, 50);
    ASSERT_GT(est.points.size(), 90000u);
    // trapezoid integral over the estimated support
    double integral = 0.0;
    double mean = 0.0;
    for (std::size_t i = 1; i < est.points.size(); ++i) {
        // points are in decreasing epsilon order
        integral += 0.5 * (est.points[i - 1].density + est.points[i].density) *
                    (est.points[i - 1].epsilon - est.points[i].epsilon);
    }
    for (const auto& pt : est.points) {
        EXPECT_GT(pt.density, 0.0);
        mean += pt.density;
    }
    mean /= est.points.size();
    EXPECT_NEAR(integral, 1.0, 0.1);
    EXPECT_NEAR(mean, 1.0, 0.05);
    for (std::size_t i = 1; i < est.points.size(); ++i)
        EXPECT_LT(est.points[i].epsilon, est.points[i - 1].epsilon);
}

TEST(EmpiricalDensity, ExactlyMirroredInputGivesExactlySymmetricOutput) {
    SplitMix64 rng(2718);
    std::vector<double> values;
    for (int i = 0; i < 400; ++i) {
        const double v = 0.01 + rng.next_double();
        values.push_back(v);
        values.push_back(-v);
    }
    const auto est = empirical_density(values, 25);
    std::map<double, double> by_eps;
    for (const auto& pt : est.points) by_eps[pt.epsilon] = pt.density;
    for (const auto& pt : est.points) {
        auto it = by_eps.find(-pt.epsilon);
        ASSERT_NE(it, by_eps.end());
        EXPECT_EQ(it->second, pt.density);  // bitwise equal by construction
    }
    // mirroring the sample set mirrors the estimate exactly
    std::vector<double> mirrored;
    for (double v : values) mirrored.push_back(-v);
    const auto mirrored_est = empirical_density(mirrored, 25);
    ASSERT_EQ(mirrored_est.points.size(), est.points.size());
    for (std::size_t i = 0; i < est.points.size(); ++i) {
        const auto& a = est.points[i];
        const auto& b = mirrored_est.points[est.points.size() - 1 - i];
        EXPECT_EQ(a.epsilon, -b.epsilon);
        EXPECT_EQ(a.density, b.density);
    }
}

TEST(EmpiricalDensity, DegenerateInputs) {
    std::vector<double> fifty(50, 0.5);
    EXPECT_THROW(empirical_density(fifty, 50), TooFewSamplesError);

    // heavy ties: tied spans give zero denominators and are omitted
    std::vector<double> ties;
    for (int i = 0; i < 40; ++i) ties.push_back(1.0);
    for (int i = 0; i < 40; ++i) ties.push_back(0.0);
    const auto est = empirical_density(ties, 5);
    for (const auto& pt : est.points) EXPECT_TRUE(std::isfinite(pt.density));
    for (std::size_t i = 1; i < est.points.size(); ++i)
        EXPECT_LT(est.points[i].epsilon, est.points[i - 1].epsilon);
    EXPECT_THROW(empirical_density({}, 50), TooFewSamplesError);
}

TEST(WinnerLoserRatio, MatchesExponentialLawOnStateFreeSamples) {
    // Synthetic pooled samples obeying the conditional law by construction:
    // losers' changes ~ N(-s^2/2, s^2) and winners' ~ N(+s^2/2, s^2), so the
    // class density ratio is exactly e^eps independent of state.
    const double s = 0.7;
    SplitMix64 rng(1234);
    std::vector<EpsilonSample> samples;
    for (int i = 0; i < 200000; ++i) {
        samples.push_back({s * next_normal(rng) + s * s / 2, Outcome::Won, "m", "w", 0});
        samples.push_back({s * next_normal(rng) - s * s / 2, Outcome::Lost, "m", "l", 0});
    }
    const double ln2 = std::log(2.0);
    const std::vector<double> edges = {-0.05, 0.05, ln2 - 0.05, ln2 + 0.05};
    const auto bins = winner_loser_ratio(samples, edges);
    ASSERT_EQ(bins.size(), 3u);
    ASSERT_TRUE(bins[0].ratio.has_value());
    EXPECT_NEAR(*bins[0].ratio, 1.0, 0.1);  // e^0
    ASSERT_TRUE(bins[2].ratio.has_value());
    EXPECT_NEAR(*bins[2].ratio, 2.0, 0.15);  // e^ln2
    EXPECT_GT(bins[2].count_won, 100);
    EXPECT_GT(bins[2].count_lost, 100);
}

TEST(WinnerLoserRatio, UndefinedAndErrorPaths) {
    std::vector<EpsilonSample> samples;
    samples.push_back({0.0, Outcome::Won, "m", "w", 0});
    samples.push_back({5.0, Outcome::Won, "m", "w", 0});
    EXPECT_THROW(winner_loser_ratio(samples, {-1.0, 1.0}), NoSamplesError);

    samples.push_back({0.0, Outcome::Lost, "m", "l", 0});
    const auto bins = winner_loser_ratio(samples, {-1.0, 1.0, 10.0});
    ASSERT_EQ(bins.size(), 2u);
    EXPECT_TRUE(bins[0].ratio.has_value());
    EXPECT_FALSE(bins[1].ratio.has_value());  // no Lost samples in the bin
    EXPECT_EQ(bins[1].count_won, 1);

    EXPECT_THROW(winner_loser_ratio(samples, {1.0}), std::invalid_argument);
}

TEST(ConditionalStats, ConstantMarketIsExactlyDegenerate) {
    const auto market =
        single(make_series("m", "c", Outcome::Won, std::vector<double>(40, 0.37)));
    std::vector<double> edges;
    for (int b = 0; b <= 20; ++b) edges.push_back(b / 20.0);
    const auto stats = conditional_stats({market}, edges);
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_EQ(stats[0].a, 0.37);
    EXPECT_EQ(stats[0].mean_next, 0.37);
    EXPECT_EQ(stats[0].var_next, 0.0);
    EXPECT_EQ(stats[0].count, 39);
    EXPECT_EQ(stats[0].count_won, 39);
    ASSERT_TRUE(stats[0].mean_next_given_won.has_value());
    EXPECT_EQ(*stats[0].mean_next_given_won, 0.37);
}

TEST(ConditionalStats, AbsorbedPricesLandInClosedTopBin) {
    const auto market = single(make_series("m", "c", Outcome::Won, {0.5, 1.0, 1.0, 1.0}));
    const auto stats = conditional_stats({market}, {0.0, 0.5, 1.0});
    // pairs: (0.5,1) in [0.5,1]; (1,1) twice, p=1 closes the top bin
    ASSERT_EQ(stats.size(), 1u);
    EXPECT_EQ(stats[0].count, 3);
    EXPECT_EQ(stats[0].bin_low, 0.5);
}

TEST(ConditionalLLRatio, TheoryColumnAndSufficiency) {
    // alternating 0.5 <-> 2/3 gives pairs at (a=0, eps=ln2) and (a=ln2, eps=-ln2)
    const double ln2 = std::log(2.0);
    std::vector<double> prices;
    for (int i = 0; i < 201; ++i) prices.push_back(i % 2 == 0 ? 0.5 : 2.0 / 3.0);
    Market won = single(make_series("m1", "w", Outcome::Won, prices));
    Market lost = single(make_series("m2", "l", Outcome::Lost, prices));
    const std::vector<double> a_edges = {-0.1, 0.1};
    const std::vector<double> e_edges = {ln2 - 0.1, ln2 + 0.1};
    const auto cells = conditional_ll_ratio({won, lost}, a_edges, e_edges, 100);
    ASSERT_EQ(cells.size(), 1u);
    EXPECT_NEAR(cells[0].theory, 4.0 / 3.0, 1e-12);
    EXPECT_TRUE(cells[0].sufficient);
    ASSERT_TRUE(cells[0].ratio.has_value());
    EXPECT_NEAR(*cells[0].ratio, 1.0, 1e-12);  // both classes jump identically here

    // a = 0, eps = 0 cell: theory exactly 1
    const auto id_cells = conditional_ll_ratio(
        {single(make_series("m", "w", Outcome::Won, std::vector<double>(150, 0.5))),
         single(make_series("m2", "l", Outcome::Lost, std::vector<double>(150, 0.5)))},
        {-0.1, 0.1}, {-0.05, 0.05}, 100);
    ASSERT_EQ(id_cells.size(), 1u);
    EXPECT_DOUBLE_EQ(id_cells[0].theory, 1.0);
    ASSERT_TRUE(id_cells[0].ratio.has_value());
    EXPECT_NEAR(*id_cells[0].ratio, 1.0, 1e-12);

    // under-sampled cell is reported but flagged, with no ratio
    const auto small = conditional_ll_ratio(
        {single(make_series("m", "w", Outcome::Won, std::vector<double>(11, 0.5))),
         single(make_series("m2", "l", Outcome::Lost, std::vector<double>(11, 0.5)))},
        {-0.1, 0.1}, {-0.05, 0.05}, 100);
    ASSERT_EQ(small.size(), 1u);
    EXPECT_FALSE(small[0].sufficient);
    EXPECT_FALSE(small[0].ratio.has_value());
    EXPECT_EQ(small[0].count_all, 20);
}

TEST(PowerLawFit, ExactAndNoisy) {
    DensityEstimate exact;
    exact.window = 50;
    for (int i = 0; i < 12; ++i) {
        const double eps = 1.0 + i * 0.5;
        exact.points.push_back({eps, std::pow(eps, -2.0)});
    }
    const auto fit = fit_power_law_tail(exact, 0.5);
    EXPECT_NEAR(fit.exponent, -2.0, 1e-9);
    EXPECT_GT(fit.r_squared, 1.0 - 1e-12);

    SplitMix64 rng(55);
    DensityEstimate noisy;
    noisy.window = 50;
    for (int i = 0; i < 30; ++i) {
        const double eps = std::exp(0.15 * i);
        noisy.points.push_back({eps, 3.0 * std::pow(eps, -1.5) * std::exp(0.01 * next_normal(rng))});
    }
    const auto nfit = fit_power_law_tail(noisy, 0.5);
    EXPECT_NEAR(nfit.exponent, -1.5, 0.1);
}

TEST(PowerLawFit, TooFewPoints) {
    DensityEstimate est;
    est.points = {{3.0, 1.0}, {2.0, 2.0}, {1.0, 4.0}};
    EXPECT_THROW(fit_power_law_tail(est, 0.5), TooFewPointsError);
    // points below the cut or with zero density do not count
    est.points = {{3.0, 1.0}, {2.5, 1.2}, {2.0, 2.0}, {1.5, 0.0}, {1.0, 4.0}, {0.1, 9.0}};
    EXPECT_THROW(fit_power_law_tail(est, 0.5), TooFewPointsError);
}

TEST(ValidateEfficiency, SimulatedEnsemblePassesTheConditionalChecks) {
    SimConfig config;
    config.n = 100;
    config.flips_per_step = 1;
    config.num_markets = 4000;
    config.seed = 77;
    const auto report = validate_efficiency(simulate_ensemble(config));
    ASSERT_EQ(report.checks.size(), 5u);
    EXPECT_EQ(report.checks[0].name, "martingale");
    EXPECT_TRUE(report.checks[0].passed) << report.checks[0].detail;
    EXPECT_EQ(report.checks[1].name, "eps_law");
    EXPECT_FALSE(report.checks[1].detail.empty());  // slope is reported either way
    EXPECT_EQ(report.checks[2].name, "conditional_ratio");
    EXPECT_TRUE(report.checks[2].passed) << report.checks[2].detail;
    EXPECT_EQ(report.checks[3].name, "variance_drift");
    EXPECT_TRUE(report.checks[3].passed) << report.checks[3].detail;
    EXPECT_EQ(report.checks[4].name, "positive_drift");
    EXPECT_TRUE(report.checks[4].passed) << report.checks[4].detail;
}

TEST(ValidateEfficiency, BiasedPricesFailTheMartingaleCheck) {
    SimConfig config;
    config.n = 100;
    config.flips_per_step = 1;
    config.num_markets = 2000;
    config.seed = 78;
    auto markets = simulate_ensemble(config);
    for (auto& market : markets)
        for (auto& cand : market.candidates)
            for (auto& pt : cand.points)
                pt.price = Probability(std::min(1.0, pt.price.value() + 0.05));
    const auto report = validate_efficiency(markets);
    EXPECT_FALSE(report.checks[0].passed);
    EXPECT_FALSE(report.all_passed());
}
