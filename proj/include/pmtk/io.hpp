#pragma once

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "pmtk/core.hpp"
#include "pmtk/date.hpp"

namespace pmtk {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DuplicateIdError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct EmptyMarketError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// One row of the price CSV (header: market_id,candidate_id,date,price,outcome).
struct RawPriceRow {
    std::string market_id;
    std::string candidate_id;
    Date date;
    double price = 0.0;
    std::optional<Outcome> outcome;
};

struct Document {
    std::string doc_id;
    Date date;
    std::string source;
    std::string text;
};

struct Corpus {
    std::vector<Document> documents;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_price(std::string_view s, std::size_t line_no) {
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError("line " + std::to_string(line_no) + ": bad price '" + std::string(s) + "'");
    return v;
}

inline std::string shortest_double(double v) {
    char buf[32];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, p);
}

inline void strip_cr(std::string& line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
}

}  // namespace detail

inline std::vector<RawPriceRow> parse_price_rows(std::istream& in) {
    std::vector<RawPriceRow> rows;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty price file");
    detail::strip_cr(line);
    ++line_no;
    if (line != "market_id,candidate_id,date,price,outcome")
        throw ParseError("line 1: bad header '" + line + "'");
    while (std::getline(in, line)) {
        detail::strip_cr(line);
        ++line_no;
        if (line.empty()) continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != 5)
            throw ParseError("line " + std::to_string(line_no) + ": expected 5 fields, got " +
                             std::to_string(fields.size()));
        RawPriceRow row;
        row.market_id = std::string(fields[0]);
        row.candidate_id = std::string(fields[1]);
        if (row.market_id.empty() || row.candidate_id.empty())
            throw ParseError("line " + std::to_string(line_no) + ": empty id field");
        try {
            row.date = Date::parse(fields[2]);
        } catch (const std::domain_error& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        row.price = detail::parse_price(fields[3], line_no);
        if (!(row.price >= 0.0))
            throw SchemaError("line " + std::to_string(line_no) + ": negative price");
        if (row.price > 1.0)
            throw SchemaError("line " + std::to_string(line_no) + ": price above 1");
        if (fields[4] == "won")
            row.outcome = Outcome::Won;
        else if (fields[4] == "lost")
            row.outcome = Outcome::Lost;
        else if (!fields[4].empty())
            throw ParseError("line " + std::to_string(line_no) + ": outcome must be won|lost|empty");
        rows.push_back(std::move(row));
    }
    return rows;
}

/// Groups rows into markets. Daily price is the last row for a
/// candidate/date in file order; the market grid is the intersection of
/// its candidates' date sets (no fill); offsets are relative to the last
/// common trading day, so loaded markets come out aligned.
inline std::vector<Market> markets_from_rows(const std::vector<RawPriceRow>& rows) {
    struct CandidateAccum {
        std::string candidate_id;
        std::map<long, double> by_date;  // serial day -> last price seen
        std::optional<Outcome> outcome;
    };
    struct MarketAccum {
        std::string market_id;
        std::vector<CandidateAccum> candidates;
        std::map<std::string, std::size_t> index;
    };
    std::vector<MarketAccum> accums;
    std::map<std::string, std::size_t> market_index;
    for (const auto& row : rows) {
        auto [mit, fresh] = market_index.try_emplace(row.market_id, accums.size());
        if (fresh) accums.push_back(MarketAccum{row.market_id, {}, {}});
        MarketAccum& m = accums[mit->second];
        auto [cit, cfresh] = m.index.try_emplace(row.candidate_id, m.candidates.size());
        if (cfresh) m.candidates.push_back(CandidateAccum{row.candidate_id, {}, {}});
        CandidateAccum& c = m.candidates[cit->second];
        c.by_date[row.date.serial()] = row.price;
        if (row.outcome) {
            if (c.outcome && *c.outcome != *row.outcome)
                throw SchemaError("candidate " + row.candidate_id + " in market " + row.market_id +
                                  " has conflicting outcome labels");
            c.outcome = row.outcome;
        }
    }

    std::vector<Market> markets;
    markets.reserve(accums.size());
    for (auto& acc : accums) {
        // common trading days across candidates
        std::set<long> grid;
        for (const auto& [day, price] : acc.candidates.front().by_date) grid.insert(day);
        for (std::size_t ci = 1; ci < acc.candidates.size(); ++ci) {
            std::set<long> next;
            for (long day : grid)
                if (acc.candidates[ci].by_date.count(day)) next.insert(day);
            grid = std::move(next);
        }
        if (grid.empty())
            throw SchemaError("market " + acc.market_id + " has no common trading days");
        const long anchor = *grid.rbegin();

        Market market;
        market.market_id = acc.market_id;
        for (auto& cand : acc.candidates) {
            if (!cand.outcome)
                throw SchemaError("candidate " + cand.candidate_id + " in market " +
                                  acc.market_id + " has no outcome label");
            CandidateSeries series;
            series.market_id = acc.market_id;
            series.candidate_id = cand.candidate_id;
            series.outcome = *cand.outcome;
            series.anchor_date = Date::from_serial(anchor);
            for (long day : grid)
                series.points.push_back(
                    {static_cast<int>(day - anchor), Probability(cand.by_date.at(day))});
            market.candidates.push_back(std::move(series));
        }
        try {
            validate_market_winner(market);
        } catch (const NoWinnerError& e) {
            throw SchemaError(e.what());
        }
        markets.push_back(std::move(market));
    }
    return markets;
}

inline std::vector<Market> load_prices(std::istream& in) {
    return markets_from_rows(parse_price_rows(in));
}

inline std::vector<Market> load_prices(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open price file: " + path);
    return load_prices(in);
}

inline void save_prices(const std::vector<Market>& markets, std::ostream& out) {
    out << "market_id,candidate_id,date,price,outcome\n";
    for (const auto& market : markets) {
        for (const auto& cand : market.candidates) {
            const char* label = cand.outcome == Outcome::Won ? "won" : "lost";
            for (const auto& pt : cand.points) {
                out << market.market_id << ',' << cand.candidate_id << ','
                    << cand.anchor_date.plus_days(pt.day_offset).to_string() << ','
                    << detail::shortest_double(pt.price.value()) << ',' << label << '\n';
            }
        }
    }
}

inline void save_prices(const std::vector<Market>& markets, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open output file: " + path);
    save_prices(markets, out);
}

/// Shifts each market so its last trading day sits at offset 0.
/// Idempotent; interior gaps are left as-is.
inline std::vector<Market> align_markets(std::vector<Market> markets) {
    for (auto& market : markets) {
        if (market.candidates.empty())
            throw EmptyMarketError("market " + market.market_id + " has no candidates");
        int max_offset = 0;
        bool any = false;
        for (const auto& cand : market.candidates) {
            if (cand.points.empty())
                throw EmptyMarketError("candidate " + cand.candidate_id + " in market " +
                                       market.market_id + " has no points");
            max_offset = any ? std::max(max_offset, cand.points.back().day_offset)
                             : cand.points.back().day_offset;
            any = true;
        }
        if (max_offset == 0) continue;
        for (auto& cand : market.candidates) {
            for (auto& pt : cand.points) pt.day_offset -= max_offset;
            cand.anchor_date = cand.anchor_date.plus_days(max_offset);
        }
    }
    return markets;
}

/// Corpus files are JSON lines with exactly doc_id, date, source, text.
inline Corpus load_corpus(std::istream& in) {
    Corpus corpus;
    std::unordered_set<std::string> seen;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        detail::strip_cr(line);
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!j.is_object() || j.size() != 4 || !j.contains("doc_id") || !j.contains("date") ||
            !j.contains("source") || !j.contains("text"))
            throw ParseError("line " + std::to_string(line_no) +
                             ": record must have exactly doc_id, date, source, text");
        Document doc;
        try {
            doc.doc_id = j.at("doc_id").get<std::string>();
            doc.source = j.at("source").get<std::string>();
            doc.text = j.at("text").get<std::string>();
            doc.date = Date::parse(j.at("date").get<std::string>());
        } catch (const std::exception& e) {
            throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
        }
        if (!seen.insert(doc.doc_id).second)
            throw DuplicateIdError("line " + std::to_string(line_no) + ": duplicate doc_id '" +
                                   doc.doc_id + "'");
        corpus.documents.push_back(std::move(doc));
    }
    return corpus;
}

inline Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    return load_corpus(in);
}

}  // namespace pmtk
