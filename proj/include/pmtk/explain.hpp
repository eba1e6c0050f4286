#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pmtk/date.hpp"
#include "pmtk/io.hpp"

namespace pmtk {

struct EmptySideError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoFeaturesError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InvalidCountsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Substitute for probabilities that come out exactly 0 or 1 inside an
/// entropy term.
inline constexpr double kEntropySmoothing = 1e-6;

/// Corpus split around a pivotal date: the positive side is the week
/// (or configured window) from the pivot on, the negative side is
/// everything earlier (optionally bounded).
struct SplitSpec {
    Date pivot_date;
    int positive_window_days = 7;
    std::optional<int> negative_window_days;  // nullopt: all earlier documents
};

inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, const SplitSpec& spec) {
    if (spec.positive_window_days < 1)
        throw std::invalid_argument("positive window must be at least one day");
    if (spec.negative_window_days && *spec.negative_window_days < 1)
        throw std::invalid_argument("negative window must be at least one day");
    Corpus negative, positive;
    const long pivot = spec.pivot_date.serial();
    for (const auto& doc : corpus.documents) {
        const long d = doc.date.serial();
        if (d >= pivot && d < pivot + spec.positive_window_days)
            positive.documents.push_back(doc);
        else if (d < pivot &&
                 (!spec.negative_window_days || d >= pivot - *spec.negative_window_days))
            negative.documents.push_back(doc);
    }
    if (negative.documents.empty())
        throw EmptySideError("no documents before the pivot date");
    if (positive.documents.empty())
        throw EmptySideError("no documents in the positive window");
    return {std::move(negative), std::move(positive)};
}

namespace detail {

inline bool is_token_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c >= 0x80;  // keep non-ASCII bytes so UTF-8 words survive intact
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline bool is_month_name(const std::string& t) {
    static const std::set<std::string> months = {
        "january", "february", "march",    "april",   "may",      "june",  "july",
        "august",  "september", "october", "november", "december", "jan",  "feb",
        "mar",     "apr",       "jun",     "jul",      "aug",      "sep",  "sept",
        "oct",     "nov",       "dec"};
    return months.count(t) > 0;
}

struct RawToken {
    std::string text;
    bool pure_number = false;
    bool date_composite = false;  // digit groups joined by - or /
};

inline std::vector<RawToken> tokenize(std::string_view text) {
    std::vector<RawToken> tokens;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        if (!is_token_char(static_cast<unsigned char>(text[i]))) {
            ++i;
            continue;
        }
        RawToken tok;
        bool all_digits = true;
        auto consume_run = [&] {
            while (i < n) {
                const unsigned char c = static_cast<unsigned char>(text[i]);
                if (is_token_char(c)) {
                    tok.text.push_back(
                        static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
                    if (!is_digit(c)) all_digits = false;
                    ++i;
                } else if (c == '\'' && i + 1 < n &&
                           is_token_char(static_cast<unsigned char>(text[i + 1])) &&
                           !tok.text.empty()) {
                    tok.text.push_back('\'');
                    all_digits = false;
                    ++i;
                } else {
                    break;
                }
            }
        };
        consume_run();
        // digit runs joined by - or / form one date-like token (2000-05-19, 5/19/00)
        while (all_digits && i + 1 < n && (text[i] == '-' || text[i] == '/') &&
               is_digit(static_cast<unsigned char>(text[i + 1]))) {
            tok.date_composite = true;
            tok.text.push_back(text[i]);
            ++i;
            while (i < n && is_digit(static_cast<unsigned char>(text[i]))) {
                tok.text.push_back(text[i]);
                ++i;
            }
        }
        tok.pure_number = all_digits && !tok.date_composite;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

}  // namespace detail

/// All 1-, 2-, and 3-grams of a document as a set (document-frequency
/// semantics). Text is lowercased; tokens are alphanumeric runs with
/// embedded apostrophes; pure numbers, digit-punctuated dates, and month
/// names adjacent to a number are removed before n-gram formation, and no
/// n-gram spans a removed token.
inline std::set<std::string> extract_features(std::string_view text) {
    const auto raw = detail::tokenize(text);
    std::vector<bool> removed(raw.size(), false);
    for (std::size_t t = 0; t < raw.size(); ++t) {
        if (raw[t].pure_number || raw[t].date_composite) {
            removed[t] = true;
        } else if (detail::is_month_name(raw[t].text)) {
            const bool prev_num = t > 0 && (raw[t - 1].pure_number || raw[t - 1].date_composite);
            const bool next_num =
                t + 1 < raw.size() && (raw[t + 1].pure_number || raw[t + 1].date_composite);
            if (prev_num || next_num) removed[t] = true;
        }
    }
    std::set<std::string> features;
    for (std::size_t start = 0; start < raw.size(); ++start) {
        if (removed[start]) continue;
        std::string gram = raw[start].text;
        features.insert(gram);
        for (std::size_t len = 2; len <= 3; ++len) {
            const std::size_t t = start + len - 1;
            if (t >= raw.size() || removed[t]) break;
            gram += ' ';
            gram += raw[t].text;
            features.insert(gram);
        }
    }
    return features;
}

inline std::set<std::string> extract_features(const Document& doc) {
    return extract_features(doc.text);
}

/// Source-specific terms to drop. Single-word entries remove every n-gram
/// containing that word; multi-word entries match whole features only.
class Stoplist {
public:
    Stoplist() = default;

    explicit Stoplist(const std::vector<std::string>& entries) {
        for (const auto& raw : entries) {
            std::string entry;
            for (char c : raw)
                entry.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
            if (entry.empty()) continue;
            if (entry.find(' ') == std::string::npos)
                unigrams_.insert(entry);
            else
                full_.insert(entry);
        }
    }

    bool blocks(const std::string& feature) const {
        if (full_.count(feature)) return true;
        if (unigrams_.empty()) return false;
        std::size_t start = 0;
        while (start <= feature.size()) {
            const std::size_t space = feature.find(' ', start);
            const std::string_view word(feature.data() + start,
                                        (space == std::string::npos ? feature.size() : space) -
                                            start);
            if (unigrams_.count(std::string(word))) return true;
            if (space == std::string::npos) break;
            start = space + 1;
        }
        return false;
    }

    bool empty() const { return full_.empty() && unigrams_.empty(); }

private:
    std::set<std::string> full_;
    std::set<std::string> unigrams_;
};

/// An n-gram with its per-side document frequencies and score.
struct FeatureStat {
    std::string feature;
    long pos_df = 0;
    long neg_df = 0;
    long pos_total = 0;
    long neg_total = 0;
    double entropy_loss = 0.0;  // bits
};

/// Candidate features: document frequencies over both corpora, keeping a
/// feature iff it appears in at least min_pos_fraction of the positive
/// documents and is not stoplisted. No generic stop-word removal.
inline std::vector<FeatureStat> filter_features(const Corpus& positive, const Corpus& negative,
                                                double min_pos_fraction = 0.075,
                                                const Stoplist& stoplist = {}) {
    if (positive.documents.empty() || negative.documents.empty())
        throw EmptySideError("both corpora must be non-empty");
    std::map<std::string, long> pos_df;
    for (const auto& doc : positive.documents)
        for (const auto& f : extract_features(doc)) pos_df[f]++;
    const long pos_total = static_cast<long>(positive.documents.size());
    const long neg_total = static_cast<long>(negative.documents.size());

    std::map<std::string, FeatureStat> kept;
    for (const auto& [feature, df] : pos_df) {
        if (static_cast<double>(df) / pos_total < min_pos_fraction) continue;
        if (stoplist.blocks(feature)) continue;
        kept.emplace(feature, FeatureStat{feature, df, 0, pos_total, neg_total, 0.0});
    }
    if (kept.empty()) throw NoFeaturesError("no features survive the filters");
    for (const auto& doc : negative.documents) {
        for (const auto& f : extract_features(doc)) {
            auto it = kept.find(f);
            if (it != kept.end()) it->second.neg_df++;
        }
    }
    std::vector<FeatureStat> out;
    out.reserve(kept.size());
    for (auto& [feature, stat] : kept) out.push_back(std::move(stat));
    return out;
}

namespace detail {

/// Binary entropy in bits with the fixed-value substitution for
/// probabilities that are exactly 0 or 1.
inline double entropy2_smoothed(double p, double phi) {
    double q = 1.0 - p;
    if (p <= 0.0) p = phi;
    else if (p >= 1.0) p = 1.0 - phi;
    if (q <= 0.0) q = phi;
    else if (q >= 1.0) q = 1.0 - phi;
    return -p * std::log2(p) - q * std::log2(q);
}

}  // namespace detail

/// Expected entropy loss e - (e_f Pr(f) + e_fbar Pr(fbar)) in bits, with
/// document-frequency counts. Zero/one probabilities inside entropy terms
/// are replaced by the fixed smoothing value, and the result is clamped
/// below at 0 so nonnegativity holds exactly despite the smoothing.
inline double expected_entropy_loss(long pos_df, long neg_df, long pos_total, long neg_total,
                                    double phi = kEntropySmoothing) {
    if (pos_total < 1 || neg_total < 1)
        throw InvalidCountsError("totals must be >= 1");
    if (pos_df < 0 || pos_df > pos_total || neg_df < 0 || neg_df > neg_total)
        throw InvalidCountsError("need 0 <= df <= total on each side");
    const double n = static_cast<double>(pos_total + neg_total);
    const double pr_pos = pos_total / n;
    const double prior = detail::entropy2_smoothed(pr_pos, phi);

    const long with_f = pos_df + neg_df;
    const long without_f = pos_total + neg_total - with_f;
    const double pr_f = with_f / n;
    const double e_f =
        with_f == 0 ? 0.0
                    : detail::entropy2_smoothed(static_cast<double>(pos_df) / with_f, phi);
    const double e_fbar =
        without_f == 0
            ? 0.0
            : detail::entropy2_smoothed(static_cast<double>(pos_total - pos_df) / without_f, phi);
    return std::max(0.0, prior - (e_f * pr_f + e_fbar * (1.0 - pr_f)));
}

struct ExplainConfig {
    double min_pos_fraction = 0.075;
    Stoplist stoplist;
    std::size_t top_k = 10;  ///< 0 keeps every surviving feature
};

/// Full pipeline: extract, filter, score, sort by entropy loss descending
/// (ties: higher pos_df, then lexicographic), truncate to top_k.
inline std::vector<FeatureStat> rank_features(const Corpus& positive, const Corpus& negative,
                                              const ExplainConfig& config = {}) {
    auto stats = filter_features(positive, negative, config.min_pos_fraction, config.stoplist);
    for (auto& stat : stats)
        stat.entropy_loss =
            expected_entropy_loss(stat.pos_df, stat.neg_df, stat.pos_total, stat.neg_total);
    std::sort(stats.begin(), stats.end(), [](const FeatureStat& a, const FeatureStat& b) {
        if (a.entropy_loss != b.entropy_loss) return a.entropy_loss > b.entropy_loss;
        if (a.pos_df != b.pos_df) return a.pos_df > b.pos_df;
        return a.feature < b.feature;
    });
    if (config.top_k > 0 && stats.size() > config.top_k) stats.resize(config.top_k);
    return stats;
}

}  // namespace pmtk
