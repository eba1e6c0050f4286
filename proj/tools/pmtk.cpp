// Command-line front end: simulate ensembles, score and analyze price
// files, validate the efficiency theory, detect pivotal dates, and explain
// them from a text corpus. Every command writes one primary CSV (or report)
// plus a <out>.manifest sidecar recording the fully resolved configuration,
// seeds, and input digests, so runs are reproducible byte for byte.

#include <chrono>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmtk/pmtk.hpp"

namespace {

std::string fnv1a64_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw pmtk::ParseError("cannot open input file: " + path);
    std::uint64_t h = 1469598103934665603ULL;
    char buf[1 << 14];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

std::string utc_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt_double(double v) { return pmtk::detail::shortest_double(v); }

/// Sidecar metadata for one run. The timestamp line is informational and
/// excluded from reproducibility comparisons; everything else is a pure
/// function of the invocation.
class Manifest {
public:
    Manifest(const std::string& command) {
        add("tool", std::string("pmtk ") + pmtk::kVersion);
        add("command", command);
        add("timestamp", utc_now());
    }
    void add(const std::string& key, const std::string& value) {
        lines_.push_back(key + ": " + value);
    }
    void add(const std::string& key, double value) { add(key, fmt_double(value)); }
    void add(const std::string& key, long long value) { add(key, std::to_string(value)); }
    void add_input(const std::string& path) { add("input " + path, "fnv1a64=" + fnv1a64_hex(path)); }
    void write(const std::string& out_path) const {
        std::ofstream out(out_path + ".manifest");
        if (!out) throw pmtk::ParseError("cannot write manifest for: " + out_path);
        for (const auto& line : lines_) out << line << '\n';
    }

private:
    std::vector<std::string> lines_;
};

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw pmtk::ParseError("cannot open output file: " + path);
    return out;
}

std::vector<pmtk::Market> load_aligned(const std::string& path) {
    return pmtk::align_markets(pmtk::load_prices(path));
}

// ---------------------------------------------------------------------- //

struct SimulateArgs {
    pmtk::SimConfig config;
    std::string out;
};

int cmd_simulate(const SimulateArgs& args) {
    args.config.validate();
    const auto markets = pmtk::simulate_ensemble(args.config);
    pmtk::save_prices(markets, args.out);
    Manifest manifest("simulate");
    manifest.add("n", static_cast<long long>(args.config.n));
    manifest.add("i0", static_cast<long long>(args.config.i0));
    manifest.add("k0", static_cast<long long>(args.config.k0));
    manifest.add("flips_per_step", static_cast<long long>(args.config.flips_per_step));
    manifest.add("markets", static_cast<long long>(args.config.num_markets));
    manifest.add("seed", static_cast<long long>(args.config.seed));
    manifest.add("rng", "splitmix64");
    manifest.add("out", args.out);
    manifest.write(args.out);
    return 0;
}

struct ScoreArgs {
    std::string prices;
    std::string out;
};

int cmd_score(const ScoreArgs& args) {
    const auto curve = pmtk::average_log_score_curve(load_aligned(args.prices));
    auto out = open_out(args.out);
    out << "day_offset,mean_score,num_markets\n";
    for (const auto& pt : curve.points)
        out << pt.day_offset << ',' << fmt_double(pt.mean_score) << ',' << pt.num_markets << '\n';
    Manifest manifest("score");
    manifest.add_input(args.prices);
    manifest.add("out", args.out);
    manifest.write(args.out);
    return 0;
}

struct DistArgs {
    std::string prices;
    int window = 50;
    double fit_min = 0.0;  // 0: no tail fit
    std::string out;
};

int cmd_dist(const DistArgs& args) {
    const auto samples = pmtk::epsilon_samples(load_aligned(args.prices));
    std::vector<double> values;
    values.reserve(samples.size());
    for (const auto& s : samples) values.push_back(s.value);
    const auto density = pmtk::empirical_density(std::move(values), args.window);
    auto out = open_out(args.out);
    out << "epsilon,density\n";
    for (const auto& pt : density.points)
        out << fmt_double(pt.epsilon) << ',' << fmt_double(pt.density) << '\n';
    Manifest manifest("dist");
    manifest.add_input(args.prices);
    manifest.add("window", static_cast<long long>(args.window));
    if (args.fit_min > 0.0) {
        const auto fit = pmtk::fit_power_law_tail(density, args.fit_min);
        std::cout << "power-law tail fit (epsilon >= " << fmt_double(args.fit_min)
                  << "): exponent=" << fmt_double(fit.exponent)
                  << " r_squared=" << fmt_double(fit.r_squared) << '\n';
        manifest.add("fit_min", args.fit_min);
        manifest.add("fit_exponent", fit.exponent);
        manifest.add("fit_r_squared", fit.r_squared);
    }
    manifest.add("out", args.out);
    manifest.write(args.out);
    return 0;
}

struct RatioArgs {
    std::string prices;
    int bins = 24;
    double eps_min = 0.05;
    std::string out;
};

int cmd_ratio(const RatioArgs& args) {
    if (args.bins < 1) throw pmtk::InvalidStateError("--bins must be >= 1");
    if (!(args.eps_min > 0.0)) throw pmtk::InvalidStateError("--eps-min must be positive");
    const auto samples = pmtk::epsilon_samples(load_aligned(args.prices));
    double eps_max = args.eps_min * 2.0;
    for (const auto& s : samples) eps_max = std::max(eps_max, std::abs(s.value));
    const auto edges =
        pmtk::detail::mirrored_log_edges(args.eps_min, eps_max * 1.0000001, args.bins);
    const auto bins = pmtk::winner_loser_ratio(samples, edges);
    auto out = open_out(args.out);
    out << "bin_center,ratio,theory,count_won,count_lost\n";
    for (const auto& bin : bins) {
        out << fmt_double(bin.center()) << ',';
        if (bin.ratio) out << fmt_double(*bin.ratio);
        out << ',' << fmt_double(std::exp(bin.center())) << ',' << bin.count_won << ','
            << bin.count_lost << '\n';
    }
    Manifest manifest("ratio");
    manifest.add_input(args.prices);
    manifest.add("bins_per_side", static_cast<long long>(args.bins));
    manifest.add("eps_min", args.eps_min);
    manifest.add("out", args.out);
    manifest.write(args.out);
    return 0;
}

struct ValidateArgs {
    std::string prices;
    int bins = 20;
    std::string out;
};

int cmd_validate(const ValidateArgs& args) {
    if (args.bins < 1) throw pmtk::InvalidStateError("--bins must be >= 1");
    pmtk::ValidationConfig config;
    config.price_bins = args.bins;
    const auto report = pmtk::validate_efficiency(load_aligned(args.prices), config);
    auto out = open_out(args.out);
    out << "check,result,detail\n";
    for (const auto& check : report.checks)
        out << check.name << ',' << (check.passed ? "PASS" : "FAIL") << ',' << check.detail
            << '\n';
    Manifest manifest("validate");
    manifest.add_input(args.prices);
    manifest.add("price_bins", static_cast<long long>(args.bins));
    manifest.add("min_bin_count", static_cast<long long>(config.min_bin_count));
    manifest.add("eps_min", config.eps_min);
    manifest.add("eps_bins_per_side", static_cast<long long>(config.eps_bins_per_side));
    manifest.add("a_max", config.a_max);
    manifest.add("a_width", config.a_width);
    manifest.add("e_max", config.e_max);
    manifest.add("e_width", config.e_width);
    manifest.add("slope_tol", config.slope_tol);
    manifest.add("intercept_tol", config.intercept_tol);
    manifest.add("min_cell_pass_fraction", config.min_cell_pass_fraction);
    manifest.add("out", args.out);
    manifest.write(args.out);
    for (const auto& check : report.checks)
        std::cout << check.name << ": " << (check.passed ? "PASS" : "FAIL") << " ("
                  << check.detail << ")\n";
    return report.all_passed() ? 0 : 1;
}

struct DetectArgs {
    std::string prices;
    std::string method = "robust_z";
    double threshold = 4.0;
    long k = 5;
    bool pooled = false;
    std::string out;
};

int cmd_detect(const DetectArgs& args) {
    pmtk::DetectPolicy policy;
    if (args.method == "robust_z") {
        policy.method = pmtk::DetectMethod::RobustZ;
        policy.parameter = args.threshold;
    } else if (args.method == "abs_threshold") {
        policy.method = pmtk::DetectMethod::AbsThreshold;
        policy.parameter = args.threshold;
    } else if (args.method == "top_k") {
        policy.method = pmtk::DetectMethod::TopK;
        policy.parameter = static_cast<double>(args.k);
    } else {
        throw pmtk::InvalidStateError("--method must be robust_z, abs_threshold or top_k");
    }
    const auto markets = load_aligned(args.prices);
    std::vector<pmtk::EventHit> hits;
    if (args.pooled) {
        std::vector<pmtk::CandidateSeries> all;
        for (const auto& market : markets)
            for (const auto& cand : market.candidates) all.push_back(cand);
        hits = pmtk::detect_events_pooled(all, policy);
    } else {
        for (const auto& market : markets) {
            for (const auto& cand : market.candidates) {
                auto series_hits = pmtk::detect_events(cand, policy);
                hits.insert(hits.end(), series_hits.begin(), series_hits.end());
            }
        }
        pmtk::detail::sort_hits(hits);
    }
    auto out = open_out(args.out);
    out << "market_id,candidate_id,date,delta_ll,robust_z\n";
    for (const auto& hit : hits)
        out << hit.market_id << ',' << hit.candidate_id << ',' << hit.date.to_string() << ','
            << fmt_double(hit.delta_ll) << ',' << fmt_double(hit.robust_z) << '\n';
    Manifest manifest("detect");
    manifest.add_input(args.prices);
    manifest.add("method", args.method);
    if (policy.method == pmtk::DetectMethod::TopK)
        manifest.add("k", static_cast<long long>(args.k));
    else
        manifest.add("threshold", args.threshold);
    manifest.add("pooled", args.pooled ? "true" : "false");
    manifest.add("out", args.out);
    manifest.write(args.out);
    return 0;
}

struct ExplainArgs {
    std::string corpus;
    std::string pivot;
    int pos_window_days = 7;
    int neg_window_days = 0;  // 0: unbounded
    double min_pos_fraction = 0.075;
    std::string stoplist_path;
    long k = 10;
    std::string out;
};

int cmd_explain(const ExplainArgs& args) {
    pmtk::SplitSpec spec;
    spec.pivot_date = pmtk::Date::parse(args.pivot);
    spec.positive_window_days = args.pos_window_days;
    if (args.neg_window_days > 0) spec.negative_window_days = args.neg_window_days;
    const auto corpus = pmtk::load_corpus(args.corpus);
    auto [negative, positive] = pmtk::split_corpus(corpus, spec);

    pmtk::ExplainConfig config;
    config.min_pos_fraction = args.min_pos_fraction;
    if (args.k < 0) throw pmtk::InvalidStateError("--k must be >= 0");
    config.top_k = static_cast<std::size_t>(args.k);
    if (!args.stoplist_path.empty()) {
        std::ifstream in(args.stoplist_path);
        if (!in) throw pmtk::ParseError("cannot open stoplist: " + args.stoplist_path);
        std::vector<std::string> entries;
        std::string line;
        while (std::getline(in, line)) {
            pmtk::detail::strip_cr(line);
            if (!line.empty()) entries.push_back(line);
        }
        config.stoplist = pmtk::Stoplist(entries);
    }
    const auto ranked = pmtk::rank_features(positive, negative, config);
    auto out = open_out(args.out);
    out << "rank,feature,entropy_loss,pos_df,neg_df\n";
    for (std::size_t i = 0; i < ranked.size(); ++i)
        out << (i + 1) << ',' << ranked[i].feature << ',' << fmt_double(ranked[i].entropy_loss)
            << ',' << ranked[i].pos_df << ',' << ranked[i].neg_df << '\n';
    Manifest manifest("explain");
    manifest.add_input(args.corpus);
    if (!args.stoplist_path.empty()) manifest.add_input(args.stoplist_path);
    manifest.add("pivot", args.pivot);
    manifest.add("pos_window_days", static_cast<long long>(args.pos_window_days));
    manifest.add("neg_window_days",
                 args.neg_window_days > 0 ? std::to_string(args.neg_window_days) : "unbounded");
    manifest.add("min_pos_fraction", args.min_pos_fraction);
    manifest.add("k", static_cast<long long>(args.k));
    manifest.add("out", args.out);
    manifest.write(args.out);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"betting-market information incorporation toolkit"};
    app.set_version_flag("--version", std::string("pmtk ") + pmtk::kVersion);
    app.require_subcommand(1);
    std::function<int()> action;

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "generate a coin-flip model ensemble");
    simulate->add_option("--n", sim.config.n, "total coin flips per market");
    simulate->add_option("--i0", sim.config.i0, "tails known at the start");
    simulate->add_option("--k0", sim.config.k0, "flips revealed at the start");
    simulate->add_option("--flips-per-step", sim.config.flips_per_step,
                         "flips revealed per recorded day");
    simulate->add_option("--markets", sim.config.num_markets, "number of simulated markets");
    simulate->add_option("--seed", sim.config.seed, "ensemble seed");
    simulate->add_option("--out", sim.out, "output price CSV")->required();
    simulate->callback([&] { action = [&] { return cmd_simulate(sim); }; });

    ScoreArgs score;
    auto* score_cmd = app.add_subcommand("score", "average log-score curve of a price file");
    score_cmd->add_option("prices", score.prices, "price CSV")->required();
    score_cmd->add_option("--out", score.out, "output curve CSV")->required();
    score_cmd->callback([&] { action = [&] { return cmd_score(score); }; });

    DistArgs dist;
    auto* dist_cmd =
        app.add_subcommand("dist", "density of daily log-likelihood changes");
    dist_cmd->add_option("prices", dist.prices, "price CSV")->required();
    dist_cmd->add_option("--window", dist.window, "rank window of the density estimator");
    dist_cmd->add_option("--fit-min", dist.fit_min,
                         "fit a power-law tail above this epsilon (0: skip)");
    dist_cmd->add_option("--out", dist.out, "output density CSV")->required();
    dist_cmd->callback([&] { action = [&] { return cmd_dist(dist); }; });

    RatioArgs ratio;
    auto* ratio_cmd =
        app.add_subcommand("ratio", "winner/loser frequency ratio over epsilon bins");
    ratio_cmd->add_option("prices", ratio.prices, "price CSV")->required();
    ratio_cmd->add_option("--bins", ratio.bins, "log-spaced bins per sign");
    ratio_cmd->add_option("--eps-min", ratio.eps_min, "smallest |epsilon| bin edge");
    ratio_cmd->add_option("--out", ratio.out, "output ratio CSV")->required();
    ratio_cmd->callback([&] { action = [&] { return cmd_ratio(ratio); }; });

    ValidateArgs validate;
    auto* validate_cmd =
        app.add_subcommand("validate", "run the efficiency-theory checks on a price file");
    validate_cmd->add_option("prices", validate.prices, "price CSV")->required();
    validate_cmd->add_option("--bins", validate.bins, "price bins on [0,1]");
    validate_cmd->add_option("--out", validate.out, "output report CSV")->required();
    validate_cmd->callback([&] { action = [&] { return cmd_validate(validate); }; });

    DetectArgs detect;
    auto* detect_cmd = app.add_subcommand("detect", "flag pivotal dates in price series");
    detect_cmd->add_option("prices", detect.prices, "price CSV")->required();
    detect_cmd->add_option("--method", detect.method, "robust_z, abs_threshold or top_k");
    detect_cmd->add_option("--threshold", detect.threshold,
                           "z threshold (robust_z) or |delta_ll| threshold (abs_threshold)");
    detect_cmd->add_option("--k", detect.k, "events per series for top_k");
    detect_cmd->add_flag("--pooled", detect.pooled,
                         "pool the change distribution across all series");
    detect_cmd->add_option("--out", detect.out, "output events CSV")->required();
    detect_cmd->callback([&] { action = [&] { return cmd_detect(detect); }; });

    ExplainArgs explain;
    auto* explain_cmd =
        app.add_subcommand("explain", "rank corpus features around a pivotal date");
    explain_cmd->add_option("corpus", explain.corpus, "JSONL corpus file")->required();
    explain_cmd->add_option("--pivot", explain.pivot, "pivotal date YYYY-MM-DD")->required();
    explain_cmd->add_option("--pos-window-days", explain.pos_window_days,
                            "days from the pivot forming the positive set");
    explain_cmd->add_option("--neg-window-days", explain.neg_window_days,
                            "days before the pivot forming the negative set (0: all)");
    explain_cmd->add_option("--min-pos-fraction", explain.min_pos_fraction,
                            "minimum fraction of positive documents per feature");
    explain_cmd->add_option("--stoplist", explain.stoplist_path,
                            "newline-delimited source-specific stoplist");
    explain_cmd->add_option("--k", explain.k, "features to keep (0: all)");
    explain_cmd->add_option("--out", explain.out, "output features CSV")->required();
    explain_cmd->callback([&] { action = [&] { return cmd_explain(explain); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        return action();
    } catch (const std::exception& e) {
        std::cerr << "pmtk: " << e.what() << '\n';
        return 2;
    }
}
