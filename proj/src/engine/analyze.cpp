#include <charconv>
#include <cmath>
#include <fstream>

#include "seqab/engine.hpp"
#include "seqab/errors.hpp"
#include "seqab/gst.hpp"

namespace seqab::engine {

using nlohmann::json;

namespace {

std::string num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json opt(const std::optional<double>& v) {
    return v && std::isfinite(*v) ? json(*v) : json(nullptr);
}

bool reports_statistic(rules::Method m) {
    return m != rules::Method::AsympCS && m != rules::Method::AsympCSLift;
}

}  // namespace

std::string_view verdict_name(Verdict v) noexcept {
    switch (v) {
        case Verdict::Significant: return "significant";
        case Verdict::NotSignificant: return "not-significant";
        case Verdict::Running: return "running";
    }
    return "running";
}

Verdict parse_verdict(std::string_view s) {
    if (s == "significant") return Verdict::Significant;
    if (s == "not-significant") return Verdict::NotSignificant;
    if (s == "running") return Verdict::Running;
    throw ConfigError("unknown verdict '" + std::string(s) + "'");
}

void to_json(json& j, const DecisionRecord& d) {
    j = json{{"experiment", d.experiment},
             {"method", d.method},
             {"verdict", verdict_name(d.verdict)},
             {"n", d.n},
             {"n0", d.n0},
             {"n1", d.n1},
             {"peeks", d.peeks},
             {"center", d.center},
             {"lower", opt(d.lower)},
             {"upper", opt(d.upper)},
             {"statistic", opt(d.statistic)}};
}

void from_json(const json& j, DecisionRecord& d) {
    try {
        d.experiment = j.at("experiment").get<std::string>();
        d.method = j.at("method").get<std::string>();
        d.verdict = parse_verdict(j.at("verdict").get<std::string>());
        d.n = j.at("n").get<std::uint64_t>();
        d.n0 = j.value("n0", std::uint64_t{0});
        d.n1 = j.value("n1", std::uint64_t{0});
        d.peeks = j.value("peeks", std::uint64_t{0});
        d.center = j.value("center", 0.0);
        auto read_opt = [&](const char* key) -> std::optional<double> {
            if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
            return j.at(key).get<double>();
        };
        d.lower = read_opt("lower");
        d.upper = read_opt("upper");
        d.statistic = read_opt("statistic");
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad decision record: ") + e.what());
    }
}

rules::RuleConfig make_rule(const AnalyzeOptions& options) {
    rules::RuleConfig rc;
    rc.method = options.method;
    rc.cs = options.cs;
    rc.theta0 = options.theta0;
    rc.bht = options.bht;
    rc.bf = options.bf;
    if (options.method == rules::Method::FHT || options.method == rules::Method::LDM) {
        if (!options.horizon || *options.horizon == 0) {
            throw ConfigError(std::string(rules::method_name(options.method)) + " needs a planned horizon");
        }
    }
    if (options.method == rules::Method::FHT) rc.fht_horizon = *options.horizon;
    if (options.method == rules::Method::LDM) {
        const auto fractions = gst::equally_spaced_fractions(options.ldm_peeks);
        rc.schedule = std::make_shared<const gst::SpendingSchedule>(gst::compute_boundaries(fractions, options.cs.alpha));
        for (std::size_t k = 1; k <= options.ldm_peeks; ++k) {
            const auto n = static_cast<std::uint64_t>(std::llround(
                static_cast<double>(k) * static_cast<double>(*options.horizon) / static_cast<double>(options.ldm_peeks)));
            rc.peek_n.push_back(std::max<std::uint64_t>(n, 1));
        }
    }
    return rc;
}

Analysis analyze(std::span<const TwoArmState> snapshots, const AnalyzeOptions& options) {
    rules::Monitor monitor(make_rule(options));
    Analysis out;
    DecisionRecord& d = out.decision;
    d.experiment = options.experiment;
    d.method = std::string(rules::method_name(options.method));
    bool crossed = false;
    std::uint64_t peeks = 0;
    for (const auto& state : snapshots) {
        const rules::Evaluation ev = monitor.evaluate(state);
        if (ev.valid) ++peeks;
        TrajectoryRow row;
        row.n = state.n();
        row.n0 = state.arm0.count();
        row.n1 = state.arm1.count();
        row.center = ev.valid && ev.has_interval ? ev.center : state.effect();
        if (ev.valid && ev.has_interval) {
            row.lower = ev.lower;
            row.upper = ev.upper;
        }
        if (!crossed) {
            d.n = row.n;
            d.n0 = row.n0;
            d.n1 = row.n1;
            d.peeks = peeks;
            d.center = row.center;
            if (ev.valid) {
                d.lower = row.lower;
                d.upper = row.upper;
                d.statistic = reports_statistic(options.method) ? std::optional<double>(ev.statistic) : std::nullopt;
            }
            if (ev.valid && ev.crossed) crossed = true;
        }
        row.verdict = crossed ? Verdict::Significant : Verdict::Running;
        out.trajectory.push_back(row);
    }
    if (crossed) {
        d.verdict = Verdict::Significant;
    } else if (options.horizon && d.n < *options.horizon) {
        d.verdict = Verdict::Running;
    } else {
        d.verdict = Verdict::NotSignificant;
    }
    if (!out.trajectory.empty() && !crossed) out.trajectory.back().verdict = d.verdict;
    return out;
}

Analysis analyze_records(std::span<const EventRecord> records, const AnalyzeOptions& options) {
    const IngestResult ing = ingest(records, {options.snapshot_every, options.dedup_units});
    return analyze(ing.snapshots, options);
}

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = "n,n0,n1,center,lower,upper,verdict\n";
    for (const auto& r : rows) {
        out += std::to_string(r.n) + "," + std::to_string(r.n0) + "," + std::to_string(r.n1) + "," + num(r.center) +
               "," + (r.lower ? num(*r.lower) : "") + "," + (r.upper ? num(*r.upper) : "") + "," +
               std::string(verdict_name(r.verdict)) + "\n";
    }
    return out;
}

void write_analysis(const Analysis& analysis, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream f(out_dir / "trajectory.csv", std::ios::binary);
        f << trajectory_csv(analysis.trajectory);
        if (!f) throw std::runtime_error("cannot write " + (out_dir / "trajectory.csv").string());
    }
    std::ofstream f(out_dir / "decision.json", std::ios::binary);
    f << json(analysis.decision).dump(2) << "\n";
    if (!f) throw std::runtime_error("cannot write " + (out_dir / "decision.json").string());
}

}  // namespace seqab::engine
