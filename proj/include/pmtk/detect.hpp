#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "pmtk/analytics.hpp"
#include "pmtk/core.hpp"
#include "pmtk/date.hpp"

namespace pmtk {

struct TooShortError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class DetectMethod { RobustZ, AbsThreshold, TopK };

struct DetectPolicy {
    DetectMethod method = DetectMethod::RobustZ;
    double parameter = 4.0;  ///< z threshold, |dll| threshold, or k
};

/// A pivotal date: the day on which an exceptionally large one-day
/// log-likelihood change was first observed (the later day of the pair).
struct EventHit {
    std::string market_id;
    std::string candidate_id;
    Date date;
    double delta_ll = 0.0;
    double robust_z = 0.0;
};

namespace detail {

inline double median_of(std::vector<double> v) {
    const std::size_t n = v.size();
    std::nth_element(v.begin(), v.begin() + n / 2, v.end());
    double hi = v[n / 2];
    if (n % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + n / 2 - 1, v.end());
    return (v[n / 2 - 1] + hi) / 2.0;
}

struct DailyChange {
    int day_offset = 0;
    double delta_ll = 0.0;
};

inline std::vector<DailyChange> daily_changes(const CandidateSeries& series, double delta) {
    CandidateSeries sorted = series;
    std::sort(sorted.points.begin(), sorted.points.end(),
              [](const PricePoint& a, const PricePoint& b) { return a.day_offset < b.day_offset; });
    std::vector<DailyChange> out;
    for_each_pair(sorted, false, [&](const PricePoint& prev, const PricePoint& next) {
        out.push_back({next.day_offset,
                       to_log_likelihood(next.price, delta).value() -
                           to_log_likelihood(prev.price, delta).value()});
    });
    return out;
}

/// Robust z against a given center/scale; +-inf on the degenerate
/// (MAD = 0) path, 0 when the change sits exactly at the median.
inline double robust_z_score(double d, double med, double mad) {
    const double dev = d - med;
    if (mad == 0.0) {
        if (dev == 0.0) return 0.0;
        return dev > 0 ? std::numeric_limits<double>::infinity()
                       : -std::numeric_limits<double>::infinity();
    }
    return dev / (1.4826 * mad);
}

inline void append_hits(std::vector<EventHit>& hits, const CandidateSeries& series,
                        const std::vector<DailyChange>& changes, const DetectPolicy& policy,
                        double med, double mad) {
    switch (policy.method) {
        case DetectMethod::RobustZ:
            for (const auto& ch : changes) {
                const double z = robust_z_score(ch.delta_ll, med, mad);
                if (std::abs(z) >= policy.parameter)
                    hits.push_back({series.market_id, series.candidate_id,
                                    series.anchor_date.plus_days(ch.day_offset), ch.delta_ll, z});
            }
            break;
        case DetectMethod::AbsThreshold:
            for (const auto& ch : changes) {
                if (std::abs(ch.delta_ll) >= policy.parameter)
                    hits.push_back({series.market_id, series.candidate_id,
                                    series.anchor_date.plus_days(ch.day_offset), ch.delta_ll,
                                    robust_z_score(ch.delta_ll, med, mad)});
            }
            break;
        case DetectMethod::TopK: {
            std::vector<std::size_t> order(changes.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                const double ma = std::abs(changes[a].delta_ll);
                const double mb = std::abs(changes[b].delta_ll);
                if (ma != mb) return ma > mb;
                return changes[a].day_offset < changes[b].day_offset;  // ties: earlier date
            });
            const std::size_t k =
                std::min(order.size(), static_cast<std::size_t>(std::max(0.0, policy.parameter)));
            for (std::size_t i = 0; i < k; ++i) {
                const auto& ch = changes[order[i]];
                hits.push_back({series.market_id, series.candidate_id,
                                series.anchor_date.plus_days(ch.day_offset), ch.delta_ll,
                                robust_z_score(ch.delta_ll, med, mad)});
            }
            break;
        }
    }
}

inline void sort_hits(std::vector<EventHit>& hits) {
    std::sort(hits.begin(), hits.end(), [](const EventHit& a, const EventHit& b) {
        if (a.date != b.date) return a.date < b.date;
        if (a.market_id != b.market_id) return a.market_id < b.market_id;
        return a.candidate_id < b.candidate_id;
    });
}

}  // namespace detail

/// Flags days with exceptionally large one-day log-likelihood changes in
/// one series. robust_z compares each change against the series median
/// with MAD scaling (consistency constant 1.4826); abs_threshold takes
/// |delta_ll| >= parameter; top_k takes the k largest magnitudes with ties
/// broken toward the earlier date. Output is date-sorted.
inline std::vector<EventHit> detect_events(const CandidateSeries& series,
                                           const DetectPolicy& policy,
                                           double delta = kDefaultClamp) {
    const std::size_t min_points = policy.method == DetectMethod::RobustZ ? 3 : 2;
    if (series.points.size() < min_points)
        throw TooShortError("series " + series.candidate_id + " has " +
                            std::to_string(series.points.size()) + " points, need " +
                            std::to_string(min_points));
    const auto changes = detail::daily_changes(series, delta);
    std::vector<EventHit> hits;
    if (changes.empty()) return hits;
    std::vector<double> values;
    values.reserve(changes.size());
    for (const auto& ch : changes) values.push_back(ch.delta_ll);
    const double med = detail::median_of(values);
    std::vector<double> dev;
    dev.reserve(values.size());
    for (double v : values) dev.push_back(std::abs(v - med));
    const double mad = detail::median_of(dev);
    detail::append_hits(hits, series, changes, policy, med, mad);
    detail::sort_hits(hits);
    return hits;
}

/// Pooled variant: median/MAD (and the top-k pool) come from the daily
/// changes of all series together, so one quiet series is judged against
/// the whole file's change distribution.
inline std::vector<EventHit> detect_events_pooled(const std::vector<CandidateSeries>& series_list,
                                                  const DetectPolicy& policy,
                                                  double delta = kDefaultClamp) {
    const std::size_t min_points = policy.method == DetectMethod::RobustZ ? 3 : 2;
    std::vector<std::vector<detail::DailyChange>> all_changes;
    std::vector<double> pooled;
    for (const auto& series : series_list) {
        if (series.points.size() < min_points)
            throw TooShortError("series " + series.candidate_id + " has " +
                                std::to_string(series.points.size()) + " points, need " +
                                std::to_string(min_points));
        all_changes.push_back(detail::daily_changes(series, delta));
        for (const auto& ch : all_changes.back()) pooled.push_back(ch.delta_ll);
    }
    std::vector<EventHit> hits;
    if (pooled.empty()) return hits;
    const double med = detail::median_of(pooled);
    std::vector<double> dev;
    dev.reserve(pooled.size());
    for (double v : pooled) dev.push_back(std::abs(v - med));
    const double mad = detail::median_of(dev);

    if (policy.method == DetectMethod::TopK) {
        struct Pooled {
            std::size_t series;
            detail::DailyChange change;
        };
        std::vector<Pooled> flat;
        for (std::size_t s = 0; s < all_changes.size(); ++s)
            for (const auto& ch : all_changes[s]) flat.push_back({s, ch});
        std::sort(flat.begin(), flat.end(), [&](const Pooled& a, const Pooled& b) {
            const double ma = std::abs(a.change.delta_ll);
            const double mb = std::abs(b.change.delta_ll);
            if (ma != mb) return ma > mb;
            const Date da = series_list[a.series].anchor_date.plus_days(a.change.day_offset);
            const Date db = series_list[b.series].anchor_date.plus_days(b.change.day_offset);
            return da < db;
        });
        const std::size_t k =
            std::min(flat.size(), static_cast<std::size_t>(std::max(0.0, policy.parameter)));
        for (std::size_t i = 0; i < k; ++i) {
            const auto& series = series_list[flat[i].series];
            const auto& ch = flat[i].change;
            hits.push_back({series.market_id, series.candidate_id,
                            series.anchor_date.plus_days(ch.day_offset), ch.delta_ll,
                            detail::robust_z_score(ch.delta_ll, med, mad)});
        }
    } else {
        for (std::size_t s = 0; s < all_changes.size(); ++s)
            detail::append_hits(hits, series_list[s], all_changes[s], policy, med, mad);
    }
    detail::sort_hits(hits);
    return hits;
}

}  // namespace pmtk
