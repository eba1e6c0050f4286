#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/core.hpp"

namespace pmtk {

struct TooFewSamplesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoSamplesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct TooFewPointsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Average logarithmic score curve (markets aligned to final trading day)

struct CurvePoint {
    int day_offset = 0;
    double mean_score = 0.0;
    int num_markets = 0;
};

struct LogScoreCurve {
    std::vector<CurvePoint> points;  // ascending day_offset
};

namespace detail {

/// Score of one market on one day. A lone candidate stands for a binary
/// event, scored on the implied (p, 1-p) distribution.
inline double market_day_score(const Market& market, const std::vector<double>& prices,
                               std::size_t widx, double delta) {
    if (prices.size() == 1) {
        const double p = prices.front();
        const Probability implied[2] = {Probability(p), Probability(1.0 - p)};
        const std::size_t w = market.candidates.front().outcome == Outcome::Won ? 0 : 1;
        return log_score(implied, w, delta);
    }
    const auto probs = normalize_prices(prices);
    return log_score(probs, widx, delta);
}

}  // namespace detail

/// Mean log score per day offset: at offset -i the mean runs over the
/// markets quoting that day (markets missing the day are skipped).
inline LogScoreCurve average_log_score_curve(const std::vector<Market>& markets,
                                             double delta = kDefaultClamp) {
    struct Accum {
        double sum = 0.0;
        int count = 0;
    };
    std::map<int, Accum> by_offset;
    for (const auto& market : markets) {
        validate_market_winner(market);
        std::size_t widx = 0;
        if (market.candidates.size() > 1) widx = winner_index(market);
        // offsets quoted by every candidate of this market
        std::map<int, std::vector<double>> day_prices;
        for (const auto& cand : market.candidates) {
            for (const auto& pt : cand.points) {
                if (pt.day_offset > 0)
                    throw std::invalid_argument("market " + market.market_id +
                                                " is not aligned (positive day_offset)");
            }
        }
        for (const auto& pt : market.candidates.front().points)
            day_prices[pt.day_offset].push_back(pt.price.value());
        for (std::size_t ci = 1; ci < market.candidates.size(); ++ci) {
            for (const auto& pt : market.candidates[ci].points) {
                auto it = day_prices.find(pt.day_offset);
                if (it != day_prices.end() && it->second.size() == ci)
                    it->second.push_back(pt.price.value());
            }
        }
        for (const auto& [offset, prices] : day_prices) {
            if (prices.size() != market.candidates.size()) continue;
            Accum& acc = by_offset[offset];
            acc.sum += detail::market_day_score(market, prices, widx, delta);
            acc.count += 1;
        }
    }
    LogScoreCurve curve;
    curve.points.reserve(by_offset.size());
    for (const auto& [offset, acc] : by_offset)
        curve.points.push_back({offset, acc.sum / acc.count, acc.count});
    return curve;
}

// ---------------------------------------------------------------------------
// Daily log-likelihood changes

/// One-day change in log-likelihood price, tagged with the candidate's
/// eventual outcome. day_offset is the later day of the pair.
struct EpsilonSample {
    double value = 0.0;
    Outcome outcome = Outcome::Lost;
    std::string market_id;
    std::string candidate_id;
    int day_offset = 0;
};

namespace detail {

/// Visits consecutive-day price pairs of one candidate series
/// (points sorted by offset; gap-crossing pairs skipped unless asked for).
template <typename Fn>
void for_each_pair(const CandidateSeries& cand, bool include_gap_crossings, Fn&& fn) {
    for (std::size_t t = 1; t < cand.points.size(); ++t) {
        const auto& prev = cand.points[t - 1];
        const auto& next = cand.points[t];
        if (!include_gap_crossings && next.day_offset - prev.day_offset != 1) continue;
        fn(prev, next);
    }
}

}  // namespace detail

inline std::vector<EpsilonSample> epsilon_samples(const std::vector<Market>& markets,
                                                  bool include_gap_crossings = false,
                                                  double delta = kDefaultClamp) {
    std::vector<EpsilonSample> out;
    for (const auto& market : markets) {
        for (const auto& cand : market.candidates) {
            detail::for_each_pair(cand, include_gap_crossings, [&](const PricePoint& prev,
                                                                   const PricePoint& next) {
                out.push_back({to_log_likelihood(next.price, delta).value() -
                                   to_log_likelihood(prev.price, delta).value(),
                               cand.outcome, market.market_id, cand.candidate_id,
                               next.day_offset});
            });
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Rank-window density estimator

struct DensityPoint {
    double epsilon = 0.0;
    double density = 0.0;
};

struct DensityEstimate {
    std::vector<DensityPoint> points;  // strictly decreasing epsilon
    int window = 0;
};

/// Density from the empirical cumulative distribution: sort descending,
/// then at the i-th largest value take the cumulative-fraction change
/// across ranks i-window..i+window over the value change. Boundary ranks
/// are not estimated; zero-denominator (tied) spans are omitted.
inline DensityEstimate empirical_density(std::vector<double> values, int window = 50) {
    if (window < 1) throw std::invalid_argument("window must be positive");
    const std::size_t n = values.size();
    const std::size_t w = static_cast<std::size_t>(window);
    if (n < 2 * w + 1)
        throw TooFewSamplesError("need at least 2*window+1 samples, got " + std::to_string(n));
    std::sort(values.begin(), values.end(), std::greater<>());
    // survival count at rank j: number of samples >= values[j] (tie-aware)
    std::vector<std::size_t> ge_count(n);
    for (std::size_t j = n; j-- > 0;) {
        if (j + 1 < n && values[j] == values[j + 1])
            ge_count[j] = ge_count[j + 1];
        else
            ge_count[j] = j + 1;
    }
    DensityEstimate est;
    est.window = window;
    for (std::size_t i = w; i + w < n; ++i) {
        if (values[i] == values[i - 1] && i > w) continue;  // one point per distinct value
        const double dx = values[i - w] - values[i + w];
        if (dx == 0.0) continue;
        const double dy =
            static_cast<double>(ge_count[i + w] - ge_count[i - w]) / static_cast<double>(n);
        est.points.push_back({values[i], dy / dx});
    }
    return est;
}

// ---------------------------------------------------------------------------
// Winner/loser frequency ratio over epsilon bins

struct RatioBin {
    double lo = 0.0;
    double hi = 0.0;
    long count_won = 0;
    long count_lost = 0;
    std::optional<double> ratio;  // absent when the Lost bin count is zero
    double center() const { return (lo + hi) / 2.0; }
};

/// Per-class-normalized frequency ratio in each [lo, hi) bin:
/// (won-in-bin / won-total) / (lost-in-bin / lost-total).
inline std::vector<RatioBin> winner_loser_ratio(const std::vector<EpsilonSample>& samples,
                                                const std::vector<double>& bin_edges) {
    if (bin_edges.size() < 2) throw std::invalid_argument("need at least 2 bin edges");
    if (!std::is_sorted(bin_edges.begin(), bin_edges.end()))
        throw std::invalid_argument("bin edges must be increasing");
    long total_won = 0;
    long total_lost = 0;
    for (const auto& s : samples) (s.outcome == Outcome::Won ? total_won : total_lost)++;
    if (total_won == 0 || total_lost == 0)
        throw NoSamplesError("winner_loser_ratio: need samples from both outcome classes");
    std::vector<RatioBin> bins(bin_edges.size() - 1);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].lo = bin_edges[b];
        bins[b].hi = bin_edges[b + 1];
    }
    for (const auto& s : samples) {
        auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), s.value);
        if (it == bin_edges.begin() || it == bin_edges.end()) continue;
        RatioBin& bin = bins[static_cast<std::size_t>(it - bin_edges.begin()) - 1];
        (s.outcome == Outcome::Won ? bin.count_won : bin.count_lost)++;
    }
    for (auto& bin : bins) {
        if (bin.count_lost > 0)
            bin.ratio = (static_cast<double>(bin.count_won) / total_won) /
                        (static_cast<double>(bin.count_lost) / total_lost);
    }
    return bins;
}

// ---------------------------------------------------------------------------
// Conditional next-price statistics per prior-price bin

/// Per-bin statistics of p_t conditioned on the bin of p_{t-1}. `a` is the
/// within-bin mean of p_{t-1} (the empirical conditioning value), which is
/// what the martingale and drift identities hold against.
struct ConditionalStats {
    double bin_low = 0.0;
    double bin_high = 0.0;
    double a = 0.0;
    long count = 0;
    double mean_next = 0.0;
    double var_next = 0.0;  // population variance
    long count_won = 0;
    std::optional<double> mean_next_given_won;
};

inline std::vector<ConditionalStats> conditional_stats(const std::vector<Market>& markets,
                                                       const std::vector<double>& bin_edges) {
    if (bin_edges.size() < 2) throw std::invalid_argument("need at least 2 bin edges");
    if (!std::is_sorted(bin_edges.begin(), bin_edges.end()))
        throw std::invalid_argument("bin edges must be increasing");
    // Welford accumulation: constant input gives exactly zero variance and
    // a == mean_next bit for bit.
    struct Accum {
        long n = 0;
        double mean_prev = 0, mean_next = 0, m2_next = 0;
        long nw = 0;
        double mean_next_won = 0;
        void add(double prev, double next, bool won) {
            ++n;
            mean_prev += (prev - mean_prev) / n;
            const double d = next - mean_next;
            mean_next += d / n;
            m2_next += d * (next - mean_next);
            if (won) {
                ++nw;
                mean_next_won += (next - mean_next_won) / nw;
            }
        }
    };
    std::vector<Accum> acc(bin_edges.size() - 1);
    auto bin_of = [&](double p) -> long {
        auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), p);
        if (it == bin_edges.begin()) return -1;
        long b = static_cast<long>(it - bin_edges.begin()) - 1;
        if (b == static_cast<long>(acc.size()) && p == bin_edges.back())
            b = static_cast<long>(acc.size()) - 1;  // top edge closes the last bin
        return b < static_cast<long>(acc.size()) ? b : -1;
    };
    for (const auto& market : markets) {
        for (const auto& cand : market.candidates) {
            detail::for_each_pair(cand, false, [&](const PricePoint& prev, const PricePoint& next) {
                const long b = bin_of(prev.price.value());
                if (b < 0) return;
                acc[static_cast<std::size_t>(b)].add(prev.price.value(), next.price.value(),
                                                     cand.outcome == Outcome::Won);
            });
        }
    }
    std::vector<ConditionalStats> out;
    for (std::size_t b = 0; b < acc.size(); ++b) {
        const Accum& a = acc[b];
        if (a.n == 0) continue;
        ConditionalStats st;
        st.bin_low = bin_edges[b];
        st.bin_high = bin_edges[b + 1];
        st.count = a.n;
        st.a = a.mean_prev;
        st.mean_next = a.mean_next;
        st.var_next = a.m2_next / a.n;
        st.count_won = a.nw;
        if (a.nw > 0) st.mean_next_given_won = a.mean_next_won;
        out.push_back(st);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conditional jump-frequency ratio in (a, eps) cells

/// Fraction of Won pairs in the a-bin that jump into the eps-bin, over the
/// same fraction among all pairs, with the predicted conditional law
/// (e^a+1)/(e^a+e^-eps) evaluated at the cell center.
struct LLRatioCell {
    double a_center = 0.0;
    double eps_center = 0.0;
    long count_won = 0;       // Won pairs in the cell
    long count_all = 0;       // all pairs in the cell
    long a_bin_count_won = 0;
    long a_bin_count_all = 0;
    double theory = 0.0;
    std::optional<double> ratio;  // absent when the cell is under-sampled
    bool sufficient = false;
};

inline std::vector<LLRatioCell> conditional_ll_ratio(const std::vector<Market>& markets,
                                                     const std::vector<double>& a_edges,
                                                     const std::vector<double>& eps_edges,
                                                     long min_cell_count = 100,
                                                     double delta = kDefaultClamp) {
    if (a_edges.size() < 2 || eps_edges.size() < 2)
        throw std::invalid_argument("need at least 2 edges per axis");
    const std::size_t na = a_edges.size() - 1;
    const std::size_t ne = eps_edges.size() - 1;
    std::vector<long> cell_all(na * ne, 0), cell_won(na * ne, 0);
    std::vector<long> abin_all(na, 0), abin_won(na, 0);
    auto locate = [](const std::vector<double>& edges, double v) -> long {
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        if (it == edges.begin() || it == edges.end()) return -1;
        return static_cast<long>(it - edges.begin()) - 1;
    };
    for (const auto& market : markets) {
        for (const auto& cand : market.candidates) {
            const bool won = cand.outcome == Outcome::Won;
            detail::for_each_pair(cand, false, [&](const PricePoint& prev, const PricePoint& next) {
                const double ll_prev = to_log_likelihood(prev.price, delta).value();
                const double eps = to_log_likelihood(next.price, delta).value() - ll_prev;
                const long ai = locate(a_edges, ll_prev);
                if (ai < 0) return;
                abin_all[ai]++;
                if (won) abin_won[ai]++;
                const long ei = locate(eps_edges, eps);
                if (ei < 0) return;
                cell_all[ai * ne + ei]++;
                if (won) cell_won[ai * ne + ei]++;
            });
        }
    }
    std::vector<LLRatioCell> out;
    for (std::size_t ai = 0; ai < na; ++ai) {
        for (std::size_t ei = 0; ei < ne; ++ei) {
            const long y = cell_all[ai * ne + ei];
            if (y == 0) continue;
            LLRatioCell cell;
            cell.a_center = (a_edges[ai] + a_edges[ai + 1]) / 2.0;
            cell.eps_center = (eps_edges[ei] + eps_edges[ei + 1]) / 2.0;
            cell.count_won = cell_won[ai * ne + ei];
            cell.count_all = y;
            cell.a_bin_count_won = abin_won[ai];
            cell.a_bin_count_all = abin_all[ai];
            cell.theory = (std::exp(cell.a_center) + 1.0) /
                          (std::exp(cell.a_center) + std::exp(-cell.eps_center));
            cell.sufficient = cell.count_won >= min_cell_count && y >= min_cell_count &&
                              abin_won[ai] > 0;
            if (cell.sufficient)
                cell.ratio = (static_cast<double>(cell.count_won) / abin_won[ai]) /
                             (static_cast<double>(y) / abin_all[ai]);
            out.push_back(cell);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Power-law tail fit

struct PowerLawFit {
    double exponent = 0.0;
    double r_squared = 0.0;
};

inline PowerLawFit fit_power_law_tail(const DensityEstimate& density, double epsilon_min) {
    if (!(epsilon_min > 0.0)) throw std::invalid_argument("epsilon_min must be positive");
    std::vector<double> lx, ly;
    for (const auto& pt : density.points) {
        if (pt.epsilon >= epsilon_min && pt.density > 0.0) {
            lx.push_back(std::log(pt.epsilon));
            ly.push_back(std::log(pt.density));
        }
    }
    const std::size_t n = lx.size();
    if (n < 5)
        throw TooFewPointsError("power-law fit needs >= 5 points, got " + std::to_string(n));
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("degenerate fit: all epsilons equal");
    PowerLawFit fit;
    fit.exponent = sxy / sxx;
    const double intercept = my - fit.exponent * mx;
    double ss_res = 0, ss_tot = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ly[i] - (intercept + fit.exponent * lx[i]);
        ss_res += r * r;
        ss_tot += (ly[i] - my) * (ly[i] - my);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

// ---------------------------------------------------------------------------
// Efficiency-theory Monte Carlo validation suite

struct ValidationCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;
    bool all_passed() const {
        return std::all_of(checks.begin(), checks.end(),
                           [](const ValidationCheck& c) { return c.passed; });
    }
};

struct ValidationConfig {
    int price_bins = 20;          ///< equal-width bins on [0,1]
    long min_bin_count = 100;     ///< cells below are flagged, not tested
    double eps_min = 0.05;        ///< smallest |eps| edge of the log bins
    int eps_bins_per_side = 24;
    double a_max = 3.0;           ///< |ll| range for conditional cells
    double a_width = 0.25;
    double e_max = 2.4;           ///< |eps| range for conditional cells
    double e_width = 0.05;
    double slope_tol = 0.1;
    double intercept_tol = 0.1;
    double min_cell_pass_fraction = 0.95;
    double delta = kDefaultClamp;
};

namespace detail {

inline std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c, d);
    return buf;
}

inline std::vector<double> mirrored_log_edges(double eps_min, double eps_max, int per_side) {
    std::vector<double> pos(per_side + 1);
    const double step = (std::log(eps_max) - std::log(eps_min)) / per_side;
    for (int j = 0; j <= per_side; ++j) pos[j] = std::exp(std::log(eps_min) + step * j);
    std::vector<double> edges;
    edges.reserve(2 * per_side + 2);
    for (int j = per_side; j >= 0; --j) edges.push_back(-pos[j]);
    for (int j = 0; j <= per_side; ++j) edges.push_back(pos[j]);
    return edges;
}

}  // namespace detail

/// Runs the five empirical consequences of prices being accurate
/// probability forecasts against the given (aligned, labelled) markets and
/// reports pass/fail with margins: martingale bins, pooled e^eps
/// regression, conditional (a,eps) ratio cells, variance drift, and
/// strictly positive drift for eventual winners.
inline ValidationReport validate_efficiency(const std::vector<Market>& markets,
                                          const ValidationConfig& cfg = {}) {
    ValidationReport report;

    // conditional price-bin statistics plus the extra moments the drift
    // standard errors need
    struct BinAccum {
        long n = 0;
        double sp = 0, sp2 = 0;
        double sn = 0, sn2 = 0, sn3 = 0, sn4 = 0;
        long nw = 0;
        double snw = 0, snw2 = 0;
    };
    std::vector<BinAccum> bins(static_cast<std::size_t>(cfg.price_bins));
    const double bin_width = 1.0 / cfg.price_bins;

    const double eps_abs_max = 2.0 * std::log((1.0 - cfg.delta) / cfg.delta) * 1.0000001;
    const auto eps_edges = detail::mirrored_log_edges(cfg.eps_min, eps_abs_max,
                                                      cfg.eps_bins_per_side);
    std::vector<long> eps_won(eps_edges.size() - 1, 0), eps_lost(eps_edges.size() - 1, 0);
    long total_won = 0, total_lost = 0;

    std::vector<double> a_edges, e_edges;
    for (double a = -cfg.a_max; a <= cfg.a_max + 1e-12; a += cfg.a_width) a_edges.push_back(a);
    for (double e = -cfg.e_max; e <= cfg.e_max + 1e-12; e += cfg.e_width) e_edges.push_back(e);
    const std::size_t na = a_edges.size() - 1, ne = e_edges.size() - 1;
    std::vector<long> cell_all(na * ne, 0), cell_won(na * ne, 0);
    std::vector<long> abin_all(na, 0), abin_won(na, 0);

    auto locate = [](const std::vector<double>& edges, double v) -> long {
        auto it = std::upper_bound(edges.begin(), edges.end(), v);
        if (it == edges.begin() || it == edges.end()) return -1;
        return static_cast<long>(it - edges.begin()) - 1;
    };

    for (const auto& market : markets) {
        for (const auto& cand : market.candidates) {
            const bool won = cand.outcome == Outcome::Won;
            detail::for_each_pair(cand, false, [&](const PricePoint& prev, const PricePoint& next) {
                const double pp = prev.price.value();
                const double pn = next.price.value();
                long b = static_cast<long>(pp / bin_width);
                if (b == cfg.price_bins) b = cfg.price_bins - 1;  // p = 1 closes the top bin
                BinAccum& acc = bins[static_cast<std::size_t>(b)];
                acc.n++;
                acc.sp += pp;
                acc.sp2 += pp * pp;
                acc.sn += pn;
                const double pn2 = pn * pn;
                acc.sn2 += pn2;
                acc.sn3 += pn2 * pn;
                acc.sn4 += pn2 * pn2;
                if (won) {
                    acc.nw++;
                    acc.snw += pn;
                    acc.snw2 += pn2;
                }

                const double ll_prev = to_log_likelihood(prev.price, cfg.delta).value();
                const double eps = to_log_likelihood(next.price, cfg.delta).value() - ll_prev;
                (won ? total_won : total_lost)++;
                const long eb = locate(eps_edges, eps);
                if (eb >= 0) (won ? eps_won : eps_lost)[static_cast<std::size_t>(eb)]++;

                const long ai = locate(a_edges, ll_prev);
                if (ai >= 0) {
                    abin_all[ai]++;
                    if (won) abin_won[ai]++;
                    const long ei = locate(e_edges, eps);
                    if (ei >= 0) {
                        cell_all[ai * ne + ei]++;
                        if (won) cell_won[ai * ne + ei]++;
                    }
                }
            });
        }
    }

    // -- check 1: martingale, |mean_next - a| <= 3*sqrt(var_next/count)
    {
        int tested = 0, failed = 0;
        double worst = 0.0;
        for (const auto& acc : bins) {
            if (acc.n < cfg.min_bin_count) continue;
            ++tested;
            const double a = acc.sp / acc.n;
            const double mean_next = acc.sn / acc.n;
            const double var_next = std::max(0.0, acc.sn2 / acc.n - mean_next * mean_next);
            const double band = 3.0 * std::sqrt(var_next / acc.n);
            const double dev = std::abs(mean_next - a);
            if (band > 0) worst = std::max(worst, dev / band);
            if (dev > band) ++failed;
        }
        report.checks.push_back(
            {"martingale", tested > 0 && failed == 0,
             detail::fmt("bins=%.0f failed=%.0f worst_dev_over_band=%.3f",
                         static_cast<double>(tested), static_cast<double>(failed), worst)});
    }

    // -- check 2: pooled e^eps law, ln(ratio) regressed on bin centers
    {
        std::vector<double> xs, ys;
        for (std::size_t b = 0; b + 1 < eps_edges.size(); ++b) {
            if (eps_won[b] >= cfg.min_bin_count && eps_lost[b] >= cfg.min_bin_count &&
                total_won > 0 && total_lost > 0) {
                const double ratio = (static_cast<double>(eps_won[b]) / total_won) /
                                     (static_cast<double>(eps_lost[b]) / total_lost);
                xs.push_back((eps_edges[b] + eps_edges[b + 1]) / 2.0);
                ys.push_back(std::log(ratio));
            }
        }
        bool pass = false;
        std::string detail_str = "bins=" + std::to_string(xs.size());
        if (xs.size() >= 2) {
            double mx = 0, my = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                mx += xs[i];
                my += ys[i];
            }
            mx /= xs.size();
            my /= xs.size();
            double sxx = 0, sxy = 0;
            for (std::size_t i = 0; i < xs.size(); ++i) {
                sxx += (xs[i] - mx) * (xs[i] - mx);
                sxy += (xs[i] - mx) * (ys[i] - my);
            }
            const double slope = sxy / sxx;
            const double intercept = my - slope * mx;
            pass = std::abs(slope - 1.0) <= cfg.slope_tol &&
                   std::abs(intercept) <= cfg.intercept_tol;
            detail_str += detail::fmt(" slope=%.4f intercept=%.4f tol=%.2f/%.2f", slope,
                                      intercept, cfg.slope_tol, cfg.intercept_tol);
        }
        report.checks.push_back({"eps_law", pass, detail_str});
    }

    // -- check 3: conditional (a,eps) ratio vs (e^a+1)/(e^a+e^-eps)
    {
        long tested = 0, passed_cells = 0;
        for (std::size_t ai = 0; ai < na; ++ai) {
            for (std::size_t ei = 0; ei < ne; ++ei) {
                const long y = cell_all[ai * ne + ei];
                const long x = cell_won[ai * ne + ei];
                if (x < cfg.min_bin_count || y < cfg.min_bin_count) continue;
                const long nw = abin_won[ai], nall = abin_all[ai];
                if (nw == 0 || nall == 0) continue;
                ++tested;
                const double ac = (a_edges[ai] + a_edges[ai + 1]) / 2.0;
                const double ec = (e_edges[ei] + e_edges[ei + 1]) / 2.0;
                const double theory =
                    (std::exp(ac) + 1.0) / (std::exp(ac) + std::exp(-ec));
                const double ratio = (static_cast<double>(x) / nw) /
                                     (static_cast<double>(y) / nall);
                const double xl = static_cast<double>(y - x);
                const double C = static_cast<double>(nall) / nw;
                const double qw = static_cast<double>(x) / nw;
                const double ql = nall > nw ? xl / (nall - nw) : 0.0;
                const double var = C * C *
                                   (xl * xl * x * (1.0 - qw) + static_cast<double>(x) * x * xl *
                                                                   (1.0 - ql)) /
                                   (static_cast<double>(y) * y * y * y);
                const double se = std::sqrt(var);
                if (std::abs(ratio - theory) <= 3.0 * se) ++passed_cells;
            }
        }
        const double frac = tested > 0 ? static_cast<double>(passed_cells) / tested : 0.0;
        report.checks.push_back(
            {"conditional_ratio", tested > 0 && frac >= cfg.min_cell_pass_fraction,
             detail::fmt("cells=%.0f passed=%.0f fraction=%.4f required=%.2f",
                         static_cast<double>(tested), static_cast<double>(passed_cells), frac,
                         cfg.min_cell_pass_fraction)});
    }

    // -- checks 4 and 5: variance drift and strictly positive drift
    {
        int tested = 0, failed_drift = 0, failed_pos = 0;
        double worst_drift = 0.0, worst_z = 1e300;
        for (const auto& acc : bins) {
            if (acc.nw < cfg.min_bin_count) continue;
            const double a = acc.sp / acc.n;
            const double mean_next = acc.sn / acc.n;
            const double var_next = std::max(0.0, acc.sn2 / acc.n - mean_next * mean_next);
            if (!(var_next > 0.0) || !(a > 0.0)) continue;
            ++tested;
            const double mean_won = acc.snw / acc.nw;
            const double drift = mean_won - a;
            const double theory = var_next / a;
            // se of mean_won
            const double var_won = std::max(0.0, acc.snw2 / acc.nw - mean_won * mean_won);
            const double se1 = std::sqrt(var_won / acc.nw);
            // se of var_next/a via the fourth central moment of p_t
            const double m2 = var_next;
            const double e1 = acc.sn / acc.n, e2 = acc.sn2 / acc.n, e3 = acc.sn3 / acc.n,
                         e4 = acc.sn4 / acc.n;
            const double m4 = std::max(
                0.0, e4 - 4.0 * e3 * e1 + 6.0 * e2 * e1 * e1 - 3.0 * e1 * e1 * e1 * e1);
            const double se2 = std::sqrt(std::max(0.0, m4 - m2 * m2) / acc.n) / a;
            // se of the a-dependence
            const double var_prev = std::max(0.0, acc.sp2 / acc.n - (acc.sp / acc.n) * (acc.sp / acc.n));
            const double se3 = (1.0 + var_next / (a * a)) * std::sqrt(var_prev / acc.n);
            const double se = std::sqrt(se1 * se1 + se2 * se2 + se3 * se3);
            const double dev = std::abs(drift - theory);
            if (se > 0) worst_drift = std::max(worst_drift, dev / (3.0 * se));
            if (dev > 3.0 * se) ++failed_drift;
            const double z = se1 > 0 ? drift / se1 : (drift > 0 ? 1e300 : -1e300);
            worst_z = std::min(worst_z, z);
            if (z < 1.645) ++failed_pos;
        }
        report.checks.push_back(
            {"variance_drift", tested > 0 && failed_drift == 0,
             detail::fmt("bins=%.0f failed=%.0f worst_dev_over_band=%.3f",
                         static_cast<double>(tested), static_cast<double>(failed_drift),
                         worst_drift)});
        report.checks.push_back(
            {"positive_drift", tested > 0 && failed_pos == 0,
             detail::fmt("bins=%.0f failed=%.0f min_one_sided_z=%.2f (need 1.645)",
                         static_cast<double>(tested), static_cast<double>(failed_pos),
                         worst_z == 1e300 ? 0.0 : worst_z)});
    }

    return report;
}

}  // namespace pmtk
