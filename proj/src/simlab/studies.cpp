#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "internal.hpp"
#include "seqab/design.hpp"
#include "seqab/errors.hpp"
#include "seqab/simlab.hpp"

namespace seqab::sim {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

std::uint64_t at_multiple(double m, std::uint64_t fht_total) {
    return static_cast<std::uint64_t>(std::ceil(m * static_cast<double>(fht_total)));
}

void append(SimReport& into, SimReport&& from) {
    for (auto& m : from.methods) into.methods.push_back(std::move(m));
}

SimReport run(const SimStudyConfig& cfg, const std::string& suffix = "") {
    return summarize(cfg, simulate_outcomes(cfg), suffix);
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    if (k == 0) return std::numeric_limits<double>::quiet_NaN();
    return k % 2 == 1 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
}

}  // namespace

SimReport run_type1_study(const SimStudyConfig& cfg) {
    if (cfg.p0 != cfg.p1) throw ConfigError("a type-I study needs equal arm means");
    SimStudyConfig c = cfg;
    c.extra_peeks.push_back(c.fht.total());
    SimReport r = run(c);
    r.study = cfg.study == "custom" ? "type1" : cfg.study;
    json finals = json::object();
    for (const auto& m : r.methods) {
        finals[m.label] = {{"at_fht_n", m.rejection_at(r.fht_total)}, {"at_horizon", m.power}};
    }
    r.extra["type1"] = finals;
    return r;
}

SimReport run_power_study(const SimStudyConfig& cfg, const std::vector<double>& horizon_multiples) {
    if (cfg.p0 == cfg.p1) throw ConfigError("a power study needs different arm means");
    if (horizon_multiples.empty()) throw ConfigError("at least one horizon multiple is required");
    SimStudyConfig c = cfg;
    const std::uint64_t fht_total = c.fht.total();
    double top = 0.0;
    for (double m : horizon_multiples) {
        if (!(m > 0.0)) throw ConfigError("horizon multiples must be positive");
        top = std::max(top, m);
        c.extra_peeks.push_back(at_multiple(m, fht_total));
    }
    c.horizon = at_multiple(top, fht_total);
    SimReport r = run(c);
    r.study = cfg.study == "custom" ? "power" : cfg.study;
    json table = json::object();
    for (const auto& m : r.methods) {
        json rows = json::array();
        for (double mult : horizon_multiples) {
            const auto n = at_multiple(mult, fht_total);
            rows.push_back({{"multiple", mult}, {"n", n}, {"power", m.rejection_at(n)}});
        }
        table[m.label] = rows;
    }
    r.extra["power_at_multiple"] = table;
    return r;
}

SimReport run_lift_power_study(const SimStudyConfig& cfg, const std::vector<double>& lifts,
                               const std::vector<double>& horizon_multiples) {
    if (lifts.empty() || horizon_multiples.empty()) throw ConfigError("lift grid and horizon multiples are required");
    SimStudyConfig base = cfg;
    base.methods = {rules::Method::AsympCS, rules::Method::AsympCSLift};
    const std::uint64_t fht_total = base.fht.total();
    double top = 0.0;
    for (double m : horizon_multiples) {
        if (!(m > 0.0)) throw ConfigError("horizon multiples must be positive");
        top = std::max(top, m);
        base.extra_peeks.push_back(at_multiple(m, fht_total));
    }
    base.horizon = at_multiple(top, fht_total);

    SimReport out;
    json table = json::array();
    for (double lift : lifts) {
        if (!(lift > 0.0)) throw ConfigError("lifts must be positive");
        SimStudyConfig c = base;
        c.p1 = c.p0 * (1.0 + lift);
        if (c.p1 > 1.0) throw ConfigError("lift pushes the treatment rate above 1");
        SimReport r = run(c, "@lift=" + fmt(lift));
        for (double mult : horizon_multiples) {
            const auto n = at_multiple(mult, fht_total);
            table.push_back({{"lift", lift},
                             {"multiple", mult},
                             {"n", n},
                             {"ate_power", r.methods[0].rejection_at(n)},
                             {"lift_power", r.methods[1].rejection_at(n)}});
        }
        if (out.methods.empty()) out = std::move(r);
        else append(out, std::move(r));
    }
    SimStudyConfig aa = base;
    aa.p1 = aa.p0;
    aa.methods = {rules::Method::AsympCSLift};
    SimReport r = run(aa, "@A/A");
    const double type1 = r.methods[0].power;
    append(out, std::move(r));
    out.study = cfg.study == "custom" ? "lift-power" : cfg.study;
    out.extra["power_by_lift"] = table;
    out.extra["lift_type1"] = type1;
    return out;
}

std::vector<SimReport> run_rho2_sweep(const SimStudyConfig& cfg, const std::vector<double>& rho2_grid) {
    if (rho2_grid.empty()) throw ConfigError("rho2 grid is empty");
    std::vector<SimReport> out;
    const std::uint64_t fht_total = cfg.fht.total();
    for (double rho2 : rho2_grid) {
        if (!(rho2 > 0.0)) throw ConfigError("rho2 values must be positive");
        SimStudyConfig aa = cfg;
        aa.cs.rho2 = rho2;
        aa.p1 = aa.p0;
        SimReport r = run(aa, "@A/A");

        SimStudyConfig pw = aa;
        pw.p1 = pw.p0 + pw.fht.mde;
        pw.horizon = 2 * fht_total;
        pw.peek_every = cfg.peek_every;
        SimReport p = run(pw, "@power-2x");

        json summary = json::object();
        for (std::size_t i = 0; i < r.methods.size(); ++i) {
            summary[r.methods[i].method] = {{"type1", r.methods[i].power}, {"power_2x", p.methods[i].power}};
        }
        append(r, std::move(p));
        r.study = cfg.study == "custom" ? "rho2-sweep" : cfg.study;
        r.extra["rho2"] = rho2;
        r.extra["summary"] = summary;
        out.push_back(std::move(r));
    }
    return out;
}

SimReport run_mde_misspec_study(const std::vector<double>& effects, double factor, const SimStudyConfig& cfg) {
    if (!(factor > 0.0)) throw ConfigError("misspecification factor must be positive");
    if (effects.empty()) throw ConfigError("effect list is empty");
    SimReport out;
    json rows = json::array();
    std::vector<double> ratios;
    for (double effect : effects) {
        if (!(effect > 0.0)) throw ConfigError("effects must be positive");
        SimStudyConfig c = cfg;
        c.methods = {rules::Method::AsympCS};
        c.p1 = c.p0 + effect;
        c.fht.p0 = c.p0;
        c.fht.mde = effect;
        c.horizon = 0;  // horizon_fht_multiple times the FHT size at the true effect
        c.peek_every = 0;
        SimReport r = run(c, "@effect=" + fmt(effect));

        FhtDesign assumed = c.fht;
        assumed.mde = factor * effect;
        const std::uint64_t fht_n = assumed.total();
        const auto q80 = r.methods[0].stop_time_quantiles.at(0.8);
        const double ratio = q80 ? static_cast<double>(*q80) / static_cast<double>(fht_n)
                                 : std::numeric_limits<double>::infinity();
        ratios.push_back(ratio);
        json row = {{"effect", effect}, {"assumed_mde", assumed.mde}, {"fht_n", fht_n}};
        row["stop_q80"] = q80 ? json(*q80) : json(nullptr);
        row["ratio"] = std::isfinite(ratio) ? json(ratio) : json(nullptr);
        rows.push_back(row);
        if (out.methods.empty()) out = std::move(r);
        else append(out, std::move(r));
    }
    out.study = cfg.study == "custom" ? "mde-misspec" : cfg.study;
    out.horizon = 0;
    out.extra["factor"] = factor;
    out.extra["ratios"] = rows;
    const double med = median(ratios);
    out.extra["median_ratio"] = std::isfinite(med) ? json(med) : json(nullptr);
    return out;
}

SimReport run_design_validation(const SimStudyConfig& cfg, const std::vector<double>& mde_grid) {
    if (mde_grid.empty()) throw ConfigError("MDE grid is empty");
    SimReport out;
    json rows = json::array();
    for (double mde : mde_grid) {
        design::DesignSpec spec;
        spec.theta_h1 = mde;
        spec.sigma2_guess = design::variance_guess_binary(cfg.p0, mde);
        spec.alpha = cfg.cs.alpha;
        spec.power = cfg.fht.power;
        const auto n_star = design::hypothesized_sample_size(spec, cfg.cs);
        if (!n_star) throw ConfigError("no hypothesized sample size below the cap for mde " + fmt(mde));
        SimStudyConfig c = cfg;
        c.methods = {rules::Method::AsympCS};
        c.p1 = c.p0 + mde;
        c.fht.p0 = c.p0;
        c.fht.mde = mde;
        c.horizon = *n_star;
        c.peek_every = 0;
        SimReport r = run(c, "@mde=" + fmt(mde));
        const MethodReport& m = r.methods[0];
        const auto q80 = m.stop_time_quantiles.at(0.8);
        json row = {{"mde", mde}, {"n_star", *n_star}, {"fht_n", c.fht.total()}, {"rejection_by_n_star", m.power}};
        row["stop_q80"] = q80 ? json(*q80) : json(nullptr);
        rows.push_back(row);
        if (out.methods.empty()) out = std::move(r);
        else append(out, std::move(r));
    }
    out.study = cfg.study == "custom" ? "design-check" : cfg.study;
    out.horizon = 0;
    out.extra["grid"] = rows;
    return out;
}

}  // namespace seqab::sim
