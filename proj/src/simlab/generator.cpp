#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <map>
#include <mutex>
#include <set>

#include "internal.hpp"
#include "seqab/design.hpp"
#include "seqab/errors.hpp"
#include "seqab/gst.hpp"
#include "seqab/simlab.hpp"

namespace seqab::sim {

using nlohmann::json;

std::uint64_t FhtDesign::per_arm() const {
    return design::fixed_horizon_sample_size(p0, mde, alpha, power);
}

void SimStudyConfig::validate() const {
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (!(p0 >= 0.0 && p0 <= 1.0) || !(p1 >= 0.0 && p1 <= 1.0)) {
        throw ConfigError("arm means must be probabilities");
    }
    if (!(allocation > 0.0 && allocation < 1.0)) throw ConfigError("allocation must lie in (0, 1)");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (horizon == 0 && !(horizon_fht_multiple > 0.0)) {
        throw ConfigError("horizon_fht_multiple must be positive");
    }
    if (!(mde_misspecification_factor > 0.0)) {
        throw ConfigError("mde_misspecification_factor must be positive");
    }
    if (ldm_peeks < 1) throw ConfigError("ldm_peeks must be at least 1");
    try {
        cs.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    const std::uint64_t h = resolved_horizon();
    if (h < resolved_peek_every()) throw ConfigError("horizon must be at least peek_every");
}

std::uint64_t SimStudyConfig::resolved_horizon() const {
    if (horizon > 0) return horizon;
    return static_cast<std::uint64_t>(std::ceil(horizon_fht_multiple * static_cast<double>(fht.total())));
}

std::uint64_t SimStudyConfig::resolved_peek_every() const {
    if (peek_every > 0) return peek_every;
    return std::max<std::uint64_t>(1, resolved_horizon() / 500);
}

namespace {

const std::set<std::string> kConfigKeys{
    "study", "methods", "method", "p0", "p1", "arm_means", "allocation", "replications", "horizon",
    "horizon_fht_multiple", "peek_every", "master_seed", "alpha", "rho2", "fht", "ldm_peeks", "bht",
    "bht_matched", "bf", "mde_misspecification_factor", "threads", "stop_when_decided", "extra_peeks",
    "horizon_multiples", "lifts", "rho2_grid", "effects"};

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void read_bht(const json& j, bayes::BhtConfig& c) {
    read(j, "prior_a", c.prior_a);
    read(j, "prior_b", c.prior_b);
    read(j, "epsilon", c.epsilon);
}

}  // namespace

void from_json(const json& j, SimStudyConfig& cfg) {
    if (!j.is_object()) throw ConfigError("study config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kConfigKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        read(j, "study", cfg.study);
        if (j.contains("methods") || j.contains("method")) {
            std::vector<std::string> names;
            if (j.contains("methods")) {
                names = j.at("methods").get<std::vector<std::string>>();
            } else {
                names.push_back(j.at("method").get<std::string>());
            }
            cfg.methods.clear();
            for (const auto& name : names) cfg.methods.push_back(rules::parse_method(name));
        }
        read(j, "p0", cfg.p0);
        read(j, "p1", cfg.p1);
        if (j.contains("arm_means")) {
            const auto means = j.at("arm_means").get<std::vector<double>>();
            if (means.size() != 2) throw ConfigError("arm_means needs two entries");
            cfg.p0 = means[0];
            cfg.p1 = means[1];
        }
        read(j, "allocation", cfg.allocation);
        read(j, "replications", cfg.replications);
        read(j, "horizon", cfg.horizon);
        read(j, "horizon_fht_multiple", cfg.horizon_fht_multiple);
        read(j, "peek_every", cfg.peek_every);
        read(j, "master_seed", cfg.master_seed);
        read(j, "alpha", cfg.cs.alpha);
        read(j, "rho2", cfg.cs.rho2);
        if (j.contains("fht")) {
            const json& f = j.at("fht");
            read(f, "p0", cfg.fht.p0);
            read(f, "mde", cfg.fht.mde);
            read(f, "alpha", cfg.fht.alpha);
            read(f, "power", cfg.fht.power);
        }
        read(j, "ldm_peeks", cfg.ldm_peeks);
        if (j.contains("bht")) read_bht(j.at("bht"), cfg.bht);
        if (j.contains("bht_matched")) read_bht(j.at("bht_matched"), cfg.bht_matched);
        if (j.contains("bf")) {
            const json& b = j.at("bf");
            read(b, "prior_a", cfg.bf.prior_a);
            read(b, "prior_b", cfg.bf.prior_b);
            read(b, "odds_threshold", cfg.bf.odds_threshold);
        }
        read(j, "mde_misspecification_factor", cfg.mde_misspecification_factor);
        read(j, "threads", cfg.threads);
        read(j, "stop_when_decided", cfg.stop_when_decided);
        read(j, "extra_peeks", cfg.extra_peeks);
        read(j, "horizon_multiples", cfg.horizon_multiples);
        read(j, "lifts", cfg.lifts);
        read(j, "rho2_grid", cfg.rho2_grid);
        read(j, "effects", cfg.effects);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad study config: ") + e.what());
    }
}

void to_json(json& j, const SimStudyConfig& cfg) {
    std::vector<std::string> names;
    for (auto m : cfg.methods) names.emplace_back(rules::method_name(m));
    j = json{{"study", cfg.study},
             {"methods", names},
             {"p0", cfg.p0},
             {"p1", cfg.p1},
             {"allocation", cfg.allocation},
             {"replications", cfg.replications},
             {"horizon", cfg.resolved_horizon()},
             {"peek_every", cfg.resolved_peek_every()},
             {"master_seed", cfg.master_seed},
             {"alpha", cfg.cs.alpha},
             {"rho2", cfg.cs.rho2},
             {"fht", {{"p0", cfg.fht.p0}, {"mde", cfg.fht.mde}, {"alpha", cfg.fht.alpha}, {"power", cfg.fht.power}}},
             {"ldm_peeks", cfg.ldm_peeks},
             {"bht", {{"prior_a", cfg.bht.prior_a}, {"prior_b", cfg.bht.prior_b}, {"epsilon", cfg.bht.epsilon}}},
             {"bht_matched",
              {{"prior_a", cfg.bht_matched.prior_a},
               {"prior_b", cfg.bht_matched.prior_b},
               {"epsilon", cfg.bht_matched.epsilon}}},
             {"bf",
              {{"prior_a", cfg.bf.prior_a}, {"prior_b", cfg.bf.prior_b}, {"odds_threshold", cfg.bf.odds_threshold}}},
             {"mde_misspecification_factor", cfg.mde_misspecification_factor}};
}

std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t index) {
    // splitmix64 finalizer over (seed, index)
    std::uint64_t z = master_seed ^ (0x9e3779b97f4a7c15ULL * (index + 1));
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

struct Look {
    std::uint64_t n;
    bool on_grid;
};

struct Plan {
    std::vector<Look> looks;
    std::vector<rules::RuleConfig> rules;
};

bool self_scheduled(rules::Method m) {
    return m == rules::Method::LDM || m == rules::Method::FHT;
}

std::shared_ptr<const gst::SpendingSchedule> ldm_schedule(std::size_t peeks, double alpha) {
    // Boundary solves are reused across the many configs a study builds.
    static std::mutex mutex;
    static std::map<std::pair<std::size_t, double>, std::shared_ptr<const gst::SpendingSchedule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[{peeks, alpha}];
    if (!slot) {
        const auto fractions = gst::equally_spaced_fractions(peeks);
        slot = std::make_shared<const gst::SpendingSchedule>(gst::compute_boundaries(fractions, alpha));
    }
    return slot;
}

Plan make_plan(const SimStudyConfig& cfg) {
    cfg.validate();
    Plan plan;
    const std::uint64_t horizon = cfg.resolved_horizon();
    const std::uint64_t every = cfg.resolved_peek_every();
    const std::uint64_t fht_total = cfg.fht.total();

    std::set<std::uint64_t> grid;
    for (std::uint64_t n = every; n <= horizon; n += every) grid.insert(n);
    grid.insert(horizon);
    for (auto n : cfg.extra_peeks) {
        if (n >= 1 && n <= horizon) grid.insert(n);
    }
    std::set<std::uint64_t> aux;

    for (auto m : cfg.methods) {
        rules::RuleConfig rc;
        rc.method = m;
        rc.cs = cfg.cs;
        rc.bht = m == rules::Method::BHTMatched ? cfg.bht_matched : cfg.bht;
        rc.bf = cfg.bf;
        if (m == rules::Method::FHT) {
            rc.fht_horizon = fht_total;
            if (fht_total <= horizon) aux.insert(fht_total);
        }
        if (m == rules::Method::LDM) {
            rc.schedule = ldm_schedule(cfg.ldm_peeks, cfg.cs.alpha);
            for (std::size_t k = 1; k <= cfg.ldm_peeks; ++k) {
                const auto n = static_cast<std::uint64_t>(
                    std::llround(static_cast<double>(k) * static_cast<double>(fht_total) /
                                 static_cast<double>(cfg.ldm_peeks)));
                rc.peek_n.push_back(std::max<std::uint64_t>(n, 1));
                if (n <= horizon) aux.insert(std::max<std::uint64_t>(n, 1));
            }
        }
        plan.rules.push_back(std::move(rc));
    }
    for (auto n : grid) aux.erase(n);
    std::vector<Look> looks;
    for (auto n : grid) looks.push_back({n, true});
    for (auto n : aux) looks.push_back({n, false});
    std::sort(looks.begin(), looks.end(), [](const Look& a, const Look& b) { return a.n < b.n; });
    plan.looks = std::move(looks);
    return plan;
}

struct Tracker {
    rules::Monitor monitor;
    MethodOutcome outcome;
    bool active = true;
};

std::vector<Tracker> make_trackers(const Plan& plan) {
    std::vector<Tracker> trackers;
    trackers.reserve(plan.rules.size());
    for (const auto& rc : plan.rules) trackers.push_back({rules::Monitor(rc), {}, true});
    return trackers;
}

// Returns false once every method has stopped.
bool observe(std::vector<Tracker>& trackers, const TwoArmState& state, bool on_grid, bool stop_when_decided) {
    bool any_active = false;
    for (auto& t : trackers) {
        if (!t.active) continue;
        const auto method = t.monitor.config().method;
        if (!on_grid && !self_scheduled(method)) {
            any_active = true;
            continue;
        }
        const rules::Evaluation ev = t.monitor.evaluate(state);
        if (ev.valid) {
            t.outcome.has_interval = ev.has_interval;
            t.outcome.lower = ev.lower;
            t.outcome.upper = ev.upper;
            t.outcome.estimate = ev.has_interval ? ev.center : state.effect();
            t.outcome.statistic = ev.statistic;
            t.outcome.chose_treatment = ev.center == 1.0 && !ev.has_interval;
            if (ev.crossed && t.outcome.stop_n == 0) {
                t.outcome.stop_n = state.n();
                if (stop_when_decided) t.active = false;
            }
        }
        any_active = any_active || t.active;
    }
    return any_active;
}

}  // namespace

std::vector<std::vector<MethodOutcome>> simulate_outcomes(const SimStudyConfig& cfg) {
    const Plan plan = make_plan(cfg);
    std::vector<std::vector<MethodOutcome>> out(cfg.replications);
    detail::parallel_for(cfg.replications, cfg.threads, [&](std::uint64_t r) {
        std::mt19937_64 rng(replication_seed(cfg.master_seed, r));
        auto trackers = make_trackers(plan);
        std::uint64_t n0 = 0, n1 = 0, s0 = 0, s1 = 0, prev = 0;
        for (const Look& look : plan.looks) {
            const std::uint64_t d = look.n - prev;
            prev = look.n;
            const std::uint64_t d1 = std::binomial_distribution<std::uint64_t>(d, cfg.allocation)(rng);
            const std::uint64_t d0 = d - d1;
            s0 += std::binomial_distribution<std::uint64_t>(d0, cfg.p0)(rng);
            s1 += std::binomial_distribution<std::uint64_t>(d1, cfg.p1)(rng);
            n0 += d0;
            n1 += d1;
            const TwoArmState state{StreamingMoments::from_binary(n0, s0), StreamingMoments::from_binary(n1, s1)};
            if (!observe(trackers, state, look.on_grid, cfg.stop_when_decided)) break;
        }
        auto& row = out[r];
        row.reserve(trackers.size());
        for (auto& t : trackers) row.push_back(t.outcome);
    });
    return out;
}

std::vector<MethodOutcome> evaluate_snapshots(const SimStudyConfig& cfg, const std::vector<TwoArmState>& snapshots) {
    const Plan plan = make_plan(cfg);
    auto trackers = make_trackers(plan);
    for (const auto& state : snapshots) {
        if (!observe(trackers, state, true, cfg.stop_when_decided)) break;
    }
    std::vector<MethodOutcome> row;
    for (auto& t : trackers) row.push_back(t.outcome);
    return row;
}

SimReport summarize(const SimStudyConfig& cfg, const std::vector<std::vector<MethodOutcome>>& outcomes,
                    const std::string& label_suffix) {
    const Plan plan = make_plan(cfg);
    SimReport report;
    report.study = cfg.study;
    report.replications = cfg.replications;
    report.horizon = cfg.resolved_horizon();
    report.peek_every = cfg.resolved_peek_every();
    report.fht_total = cfg.fht.total();
    report.master_seed = cfg.master_seed;

    std::vector<std::uint64_t> grid;
    for (const auto& look : plan.looks) {
        if (look.on_grid) grid.push_back(look.n);
    }
    const double reps = static_cast<double>(outcomes.size());
    for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
        const rules::Method method = cfg.methods[m];
        MethodReport mr;
        mr.method = std::string(rules::method_name(method));
        mr.label = mr.method + label_suffix;
        mr.peek_n = grid;

        std::vector<std::uint64_t> stops;
        stops.reserve(outcomes.size());
        for (const auto& row : outcomes) stops.push_back(row[m].stop_n == 0 ? UINT64_MAX : row[m].stop_n);
        std::vector<std::uint64_t> sorted = stops;
        std::sort(sorted.begin(), sorted.end());
        std::size_t idx = 0;
        for (auto n : grid) {
            while (idx < sorted.size() && sorted[idx] <= n) ++idx;
            mr.cumulative_rejection.push_back(static_cast<double>(idx) / reps);
        }
        mr.power = mr.cumulative_rejection.empty() ? 0.0 : mr.cumulative_rejection.back();
        for (double q : {0.5, 0.8, 0.9}) {
            const auto v = detail::order_quantile(stops, q);
            mr.stop_time_quantiles[q] = v == UINT64_MAX ? std::nullopt : std::optional<std::uint64_t>(v);
        }

        const bool lift = method == rules::Method::AsympCSLift;
        const double truth = lift ? (cfg.p0 > 0.0 ? cfg.p1 / cfg.p0 - 1.0 : 0.0) : cfg.p1 - cfg.p0;
        std::uint64_t with_interval = 0, missed = 0, stopped = 0;
        double loss = 0.0, posterior_loss = 0.0;
        for (const auto& row : outcomes) {
            const MethodOutcome& o = row[m];
            if (o.has_interval) {
                ++with_interval;
                if (truth < o.lower || truth > o.upper) ++missed;
            }
            if (o.stop_n > 0) {
                ++stopped;
                loss += o.chose_treatment ? std::max(cfg.p0 - cfg.p1, 0.0) : std::max(cfg.p1 - cfg.p0, 0.0);
                posterior_loss += o.statistic;
            }
        }
        if (with_interval > 0 && !(lift && cfg.p0 == 0.0)) {
            mr.miscoverage_at_stop = static_cast<double>(missed) / static_cast<double>(with_interval);
        }
        const bool bht = method == rules::Method::BHTUninformed || method == rules::Method::BHTMatched;
        if (bht && stopped > 0) {
            mr.mean_loss_at_stop = loss / static_cast<double>(stopped);
            mr.mean_posterior_loss_at_stop = posterior_loss / static_cast<double>(stopped);
        }
        report.methods.push_back(std::move(mr));
    }
    report.scaling_note = "desk scale: " + std::to_string(cfg.replications) + " replications, looks every " +
                          std::to_string(report.peek_every) + " observations up to n = " +
                          std::to_string(report.horizon);
    return report;
}

}  // namespace seqab::sim
