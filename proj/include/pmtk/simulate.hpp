#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/core.hpp"
#include "pmtk/rng.hpp"

namespace pmtk {

struct InvalidStateError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Coin-flip information-release model: the event is "ceil(n/2) or more
/// tails in n fair flips"; revealing flips moves the price.
struct SimConfig {
    int n = 1200;                ///< total coin flips
    int i0 = 0;                  ///< tails known at t = 0
    int k0 = 0;                  ///< flips revealed at t = 0
    int flips_per_step = 2;      ///< flips revealed per recorded step
    int num_markets = 22;
    std::uint64_t seed = 0;

    void validate() const {
        if (n < 1) throw InvalidStateError("n must be >= 1");
        if (i0 < 0 || i0 > k0 || k0 > n)
            throw InvalidStateError("need 0 <= i0 <= k0 <= n");
        if (flips_per_step < 1) throw InvalidStateError("flips_per_step must be >= 1");
        if (num_markets < 1) throw InvalidStateError("num_markets must be >= 1");
    }
};

struct SimState {
    int tails = 0;     ///< i_t
    int revealed = 0;  ///< k_t
};

/// Calendar date assigned to day_offset 0 when serializing simulated
/// series (any fixed date works; analytics only use offsets).
inline const Date kSimAnchorDate(2000, 11, 7);

namespace detail {

/// log of the binomial tail Pr(X >= r), X ~ Bin(m, 1/2), summed over the
/// smaller tail with incremental log-binomial terms so the result keeps
/// ~1e-12 relative accuracy for m up to several thousand.
inline double binomial_tail_half(int m, int r) {
    if (r <= 0) return 1.0;
    if (r > m) return 0.0;
    const double log_half_m = -static_cast<double>(m) * std::log(2.0);
    auto log_binom = [m](int j) {
        return std::lgamma(m + 1.0) - std::lgamma(j + 1.0) - std::lgamma(m - j + 1.0);
    };
    // Upper tail has m-r+1 terms, lower tail r; sum whichever is shorter.
    if (m - r + 1 <= r) {
        // terms j = r..m, decreasing from j = r since r > m/2
        double log_t0 = log_binom(r) + log_half_m;
        double log_t = log_t0;
        double scaled = 1.0;
        for (int j = r; j < m; ++j) {
            log_t += std::log(static_cast<double>(m - j) / (j + 1.0));
            scaled += std::exp(log_t - log_t0);
        }
        return std::exp(log_t0 + std::log(scaled));
    }
    // complement of the lower tail j = 0..r-1, largest term at j = r-1
    double log_t0 = log_binom(r - 1) + log_half_m;
    double log_t = log_t0;
    double scaled = 1.0;
    for (int j = r - 1; j > 0; --j) {
        log_t += std::log(static_cast<double>(j) / (m - j + 1.0));
        scaled += std::exp(log_t - log_t0);
    }
    return 1.0 - std::exp(log_t0 + std::log(scaled));
}

}  // namespace detail

/// Probability that ceil(n/2) or more tails occur in total, given i tails
/// seen in k revealed flips: (1/2)^(n-k) * sum_{j=ceil(n/2)-i}^{n-k} C(n-k, j).
inline Probability event_probability(int n, int i, int k) {
    if (n < 1 || i < 0 || i > k || k > n)
        throw InvalidStateError("event_probability: need 0 <= i <= k <= n, n >= 1");
    const int need = (n + 1) / 2;  // ceil(n/2)
    return Probability(detail::binomial_tail_half(n - k, need - i));
}

/// One simulated market: reveals n-k0 fair coin flips from the stream for
/// (config.seed, market_index), recording the price after every
/// flips_per_step flips plus the initial prior point. The final state
/// (k = n) is always recorded so the last price is degenerate.
inline CandidateSeries simulate_market(const SimConfig& config, int market_index) {
    config.validate();
    SplitMix64 rng(derive_stream_seed(config.seed, static_cast<std::uint64_t>(market_index)));

    std::vector<double> prices;
    prices.push_back(event_probability(config.n, config.i0, config.k0).value());
    SimState state{config.i0, config.k0};
    while (state.revealed < config.n) {
        for (int f = 0; f < config.flips_per_step && state.revealed < config.n; ++f) {
            state.tails += rng.next_coin() ? 1 : 0;
            ++state.revealed;
        }
        prices.push_back(event_probability(config.n, state.tails, state.revealed).value());
    }

    CandidateSeries series;
    series.market_id = "sim" + std::to_string(market_index);
    series.candidate_id = "event";
    series.outcome = state.tails >= (config.n + 1) / 2 ? Outcome::Won : Outcome::Lost;
    series.anchor_date = kSimAnchorDate;
    series.points.reserve(prices.size());
    const int first_offset = -static_cast<int>(prices.size()) + 1;
    for (std::size_t t = 0; t < prices.size(); ++t)
        series.points.push_back({first_offset + static_cast<int>(t), Probability(prices[t])});
    return series;
}

/// num_markets single-candidate markets, deterministic given the seed and
/// ordered by market index.
inline std::vector<Market> simulate_ensemble(const SimConfig& config) {
    config.validate();
    std::vector<Market> out;
    out.reserve(config.num_markets);
    for (int idx = 0; idx < config.num_markets; ++idx) {
        CandidateSeries series = simulate_market(config, idx);
        out.push_back(Market{series.market_id, {std::move(series)}});
    }
    return out;
}

}  // namespace pmtk
