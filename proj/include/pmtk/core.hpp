#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/date.hpp"

namespace pmtk {

/// Default clamp distance from the {0,1} singularities of the
/// likelihood transforms. Real markets quote 0 and 1; the transforms
/// are singular there, so prices are clamped to [delta, 1-delta].
inline constexpr double kDefaultClamp = 1e-6;

struct AllZeroError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A real number in [0,1]. Construction validates the bound.
class Probability {
public:
    Probability() = default;
    explicit Probability(double v) : v_(v) {
        if (!(v >= 0.0 && v <= 1.0))
            throw std::domain_error("probability outside [0,1]: " + std::to_string(v));
    }
    double value() const { return v_; }
    friend bool operator==(const Probability&, const Probability&) = default;

private:
    double v_ = 0.0;
};

/// Natural log of the odds p/(1-p); finite by construction because
/// inputs are clamped before the transform.
class LogLikelihoodPrice {
public:
    LogLikelihoodPrice() = default;
    explicit LogLikelihoodPrice(double v) : v_(v) {
        if (!std::isfinite(v))
            throw std::domain_error("log-likelihood price must be finite");
    }
    double value() const { return v_; }
    friend bool operator==(const LogLikelihoodPrice&, const LogLikelihoodPrice&) = default;

private:
    double v_ = 0.0;
};

inline double clamp_probability(double p, double delta = kDefaultClamp) {
    return std::min(std::max(p, delta), 1.0 - delta);
}

/// Likelihood (odds) price l = p/(1-p), clamped so the result is
/// strictly positive and finite for any input in [0,1].
inline double to_likelihood(Probability p, double delta = kDefaultClamp) {
    const double c = clamp_probability(p.value(), delta);
    return c / (1.0 - c);
}

/// Log-likelihood price ll = ln(p/(1-p)); 0 at p = 1/2.
inline LogLikelihoodPrice to_log_likelihood(Probability p, double delta = kDefaultClamp) {
    return LogLikelihoodPrice(std::log(to_likelihood(p, delta)));
}

/// Inverse transform e^ll/(1+e^ll), computed on whichever side of 0
/// keeps the exponential small.
inline Probability from_log_likelihood(double ll) {
    if (!std::isfinite(ll))
        throw std::domain_error("log-likelihood price must be finite");
    if (ll >= 0.0) return Probability(1.0 / (1.0 + std::exp(-ll)));
    const double e = std::exp(ll);
    return Probability(e / (1.0 + e));
}

inline Probability from_log_likelihood(LogLikelihoodPrice ll) {
    return from_log_likelihood(ll.value());
}

/// Proportional normalization of raw non-negative prices.
inline std::vector<Probability> normalize_prices(std::span<const double> raw) {
    double sum = 0.0;
    for (double v : raw) {
        if (!(v >= 0.0))
            throw std::domain_error("negative price in normalize_prices");
        sum += v;
    }
    if (raw.empty() || sum <= 0.0)
        throw AllZeroError("normalize_prices: all prices zero");
    std::vector<Probability> out;
    out.reserve(raw.size());
    for (double v : raw) out.emplace_back(v / sum);
    return out;
}

/// Logarithmic score ln(p_winner). Only the lower clamp applies here:
/// ln(1) = 0 is the legitimate maximum, while ln(0) must stay finite.
inline double log_score(std::span<const Probability> probs, std::size_t winner_index,
                        double delta = kDefaultClamp) {
    if (winner_index >= probs.size())
        throw std::out_of_range("log_score: winner index out of range");
    return std::log(std::max(probs[winner_index].value(), delta));
}

enum class Outcome { Won, Lost };

/// One daily price, day_offset relative to the final trading day
/// (offset 0), so all offsets are <= 0 after alignment.
struct PricePoint {
    int day_offset = 0;
    Probability price;
    friend bool operator==(const PricePoint&, const PricePoint&) = default;
};

/// One tradable outcome's daily price series plus its eventual label.
/// anchor_date is the calendar date of day_offset 0.
struct CandidateSeries {
    std::string market_id;
    std::string candidate_id;
    Outcome outcome = Outcome::Lost;
    Date anchor_date;
    std::vector<PricePoint> points;
    friend bool operator==(const CandidateSeries&, const CandidateSeries&) = default;
};

struct Market {
    std::string market_id;
    std::vector<CandidateSeries> candidates;
    friend bool operator==(const Market&, const Market&) = default;
};

struct NoWinnerError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Index of the unique Won candidate.
inline std::size_t winner_index(const Market& market) {
    std::size_t idx = market.candidates.size();
    std::size_t won = 0;
    for (std::size_t i = 0; i < market.candidates.size(); ++i) {
        if (market.candidates[i].outcome == Outcome::Won) {
            idx = i;
            ++won;
        }
    }
    if (won != 1)
        throw NoWinnerError("market " + market.market_id + " has " + std::to_string(won) +
                            " winners (expected exactly 1)");
    return idx;
}

/// Multi-candidate markets need exactly one Won candidate. A lone
/// candidate stands for a binary event whose complement is implied, so
/// either label is valid there.
inline void validate_market_winner(const Market& market) {
    if (market.candidates.size() == 1) return;
    winner_index(market);
}

}  // namespace pmtk
