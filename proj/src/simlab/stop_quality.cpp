#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "internal.hpp"
#include "seqab/errors.hpp"
#include "seqab/simlab.hpp"

namespace seqab::sim {

using nlohmann::json;

void StopQualityConfig::validate() const {
    if (!(truth_a > 0.0 && truth_b > 0.0)) throw ConfigError("truth prior parameters must be positive");
    if (!(theta0 > 0.0 && theta0 < 1.0)) throw ConfigError("theta0 must lie in (0, 1)");
    if (replications < 1) throw ConfigError("replications must be at least 1");
    if (first_peek < 1 || last_peek < first_peek) throw ConfigError("need 1 <= first_peek <= last_peek");
    if (peeks < 1) throw ConfigError("peeks must be at least 1");
    if (rules.empty()) throw ConfigError("at least one rule is required");
    for (const auto& r : rules) {
        try {
            r.cs.validate();
            if (r.method == SingleArmMethod::BHT) r.prior.validate();
        } catch (const DomainError& e) {
            throw ConfigError(e.what());
        }
        if (!(r.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
        if (!(r.credible_level > 0.0 && r.credible_level < 1.0)) throw ConfigError("credible_level must lie in (0, 1)");
    }
}

std::vector<std::uint64_t> StopQualityConfig::peek_schedule() const {
    std::vector<std::uint64_t> out;
    if (peeks == 1) return {last_peek};
    const double lo = std::log(static_cast<double>(first_peek));
    const double hi = std::log(static_cast<double>(last_peek));
    for (std::size_t i = 0; i < peeks; ++i) {
        const double t = static_cast<double>(i) / static_cast<double>(peeks - 1);
        auto n = static_cast<std::uint64_t>(std::llround(std::exp(lo + t * (hi - lo))));
        n = std::clamp(n, first_peek, last_peek);
        if (out.empty() || n > out.back()) out.push_back(n);
    }
    out.back() = last_peek;
    return out;
}

namespace {

const std::set<std::string> kKeys{"truth_a", "truth_b",  "theta0",      "replications", "first_peek",
                                  "last_peek", "peeks",   "master_seed", "threads",      "rules"};
const std::set<std::string> kRuleKeys{"method", "alpha", "rho2", "prior_a", "prior_b",
                                      "epsilon", "credible_level", "label"};

std::string method_label(SingleArmMethod m) {
    switch (m) {
        case SingleArmMethod::AsympCS: return "AsympCS";
        case SingleArmMethod::MSPRT: return "mSPRT";
        case SingleArmMethod::BHT: return "BHT";
    }
    return "unknown";
}

SingleArmMethod parse_single(const std::string& name) {
    std::string key;
    for (char ch : name) key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (key == "asympcs" || key == "asympcs-mean") return SingleArmMethod::AsympCS;
    if (key == "msprt") return SingleArmMethod::MSPRT;
    if (key == "bht") return SingleArmMethod::BHT;
    throw ConfigError("unknown single-arm method '" + name + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

double draw_beta(std::mt19937_64& rng, double a, double b) {
    const double x = std::gamma_distribution<double>(a, 1.0)(rng);
    const double y = std::gamma_distribution<double>(b, 1.0)(rng);
    return x / (x + y);
}

struct RuleOutcome {
    std::uint64_t stop_n = 0;
    double lower = 0.0;
    double upper = 0.0;
    double estimate = 0.0;
    double realized_loss = 0.0;
    double posterior_loss = 0.0;
};

struct RepOutcome {
    double theta = 0.0;
    std::vector<RuleOutcome> rules;
};

}  // namespace

void from_json(const json& j, StopQualityConfig& cfg) {
    if (!j.is_object()) throw ConfigError("stop-quality config must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (!kKeys.count(key)) throw ConfigError("unknown config key '" + key + "'");
    }
    try {
        read(j, "truth_a", cfg.truth_a);
        read(j, "truth_b", cfg.truth_b);
        read(j, "theta0", cfg.theta0);
        read(j, "replications", cfg.replications);
        read(j, "first_peek", cfg.first_peek);
        read(j, "last_peek", cfg.last_peek);
        read(j, "peeks", cfg.peeks);
        read(j, "master_seed", cfg.master_seed);
        read(j, "threads", cfg.threads);
        if (j.contains("rules")) {
            cfg.rules.clear();
            for (const auto& rj : j.at("rules")) {
                for (const auto& [key, value] : rj.items()) {
                    if (!kRuleKeys.count(key)) throw ConfigError("unknown rule key '" + key + "'");
                }
                SingleArmRule r;
                r.method = parse_single(rj.at("method").get<std::string>());
                read(rj, "alpha", r.cs.alpha);
                read(rj, "rho2", r.cs.rho2);
                read(rj, "prior_a", r.prior.a);
                read(rj, "prior_b", r.prior.b);
                read(rj, "epsilon", r.epsilon);
                read(rj, "credible_level", r.credible_level);
                read(rj, "label", r.label);
                cfg.rules.push_back(r);
            }
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad stop-quality config: ") + e.what());
    }
}

SimReport run_stop_quality_study(const StopQualityConfig& cfg) {
    cfg.validate();
    const auto schedule = cfg.peek_schedule();
    const std::size_t R = cfg.rules.size();
    std::vector<RepOutcome> reps(cfg.replications);

    detail::parallel_for(cfg.replications, cfg.threads, [&](std::uint64_t rep) {
        std::mt19937_64 rng(replication_seed(cfg.master_seed, rep));
        RepOutcome& out = reps[rep];
        out.theta = draw_beta(rng, cfg.truth_a, cfg.truth_b);
        out.rules.assign(R, {});
        std::vector<double> p_value(R, 1.0);
        std::vector<bool> active(R, true);
        std::size_t remaining = R;
        std::uint64_t n = 0, s = 0;
        for (std::size_t k = 0; k < schedule.size() && remaining > 0; ++k) {
            const std::uint64_t d = schedule[k] - n;
            s += std::binomial_distribution<std::uint64_t>(d, out.theta)(rng);
            n = schedule[k];
            const bool last = k + 1 == schedule.size();
            const StreamingMoments arm = StreamingMoments::from_binary(n, s);
            for (std::size_t i = 0; i < R; ++i) {
                if (!active[i]) continue;
                const SingleArmRule& rule = cfg.rules[i];
                RuleOutcome& o = out.rules[i];
                bool stop = false;
                Interval iv;
                switch (rule.method) {
                    case SingleArmMethod::AsympCS: {
                        if (n < 2) continue;
                        iv = asympcs_mean(arm, rule.cs);
                        stop = iv.excludes(cfg.theta0);
                        o.estimate = arm.mean();
                        break;
                    }
                    case SingleArmMethod::MSPRT: {
                        if (n < 2 || !(arm.unbiased_variance() > 0.0)) continue;
                        p_value[i] = msprt_p_step(p_value[i], arm, rule.cs, cfg.theta0);
                        stop = p_value[i] <= rule.cs.alpha;
                        if (stop || last) iv = msprt_cs(arm, rule.cs);
                        o.estimate = arm.mean();
                        break;
                    }
                    case SingleArmMethod::BHT: {
                        const bayes::BetaPosterior post = rule.prior.updated(s, n);
                        const auto d = bayes::single_arm_bht_decide(post, cfg.theta0, rule.epsilon);
                        stop = d.stop;
                        if (stop || last) {
                            const double tail = 0.5 * (1.0 - rule.credible_level);
                            iv = {beta_quantile(tail, post.a, post.b), beta_quantile(1.0 - tail, post.a, post.b)};
                            o.posterior_loss = d.loss;
                            o.realized_loss = d.above ? std::max(cfg.theta0 - out.theta, 0.0)
                                                      : std::max(out.theta - cfg.theta0, 0.0);
                        }
                        o.estimate = post.mean();
                        break;
                    }
                }
                if (stop || last) {
                    o.lower = iv.lower;
                    o.upper = iv.upper;
                }
                if (stop) {
                    o.stop_n = n;
                    active[i] = false;
                    --remaining;
                }
            }
        }
    });

    SimReport report;
    report.study = "stop-quality";
    report.replications = cfg.replications;
    report.horizon = schedule.back();
    report.peek_every = 0;
    report.master_seed = cfg.master_seed;
    report.scaling_note = "desk scale: " + std::to_string(cfg.replications) + " runs, " +
                          std::to_string(schedule.size()) + " log-spaced looks from " +
                          std::to_string(schedule.front()) + " to " + std::to_string(schedule.back());
    const double nrep = static_cast<double>(cfg.replications);
    json per_rule = json::array();
    for (std::size_t i = 0; i < R; ++i) {
        const SingleArmRule& rule = cfg.rules[i];
        MethodReport mr;
        mr.method = method_label(rule.method);
        mr.label = rule.label.empty() ? mr.method : rule.label;
        mr.peek_n = schedule;
        std::vector<std::uint64_t> stops;
        std::uint64_t missed = 0, stopped = 0;
        double loss = 0.0, posterior_loss = 0.0;
        for (const auto& rep : reps) {
            const RuleOutcome& o = rep.rules[i];
            stops.push_back(o.stop_n == 0 ? UINT64_MAX : o.stop_n);
            if (rep.theta < o.lower || rep.theta > o.upper) ++missed;
            if (o.stop_n > 0) {
                ++stopped;
                loss += o.realized_loss;
                posterior_loss += o.posterior_loss;
                mr.calibration_pairs.emplace_back(rep.theta - cfg.theta0, o.estimate - cfg.theta0);
            }
        }
        std::vector<std::uint64_t> sorted = stops;
        std::sort(sorted.begin(), sorted.end());
        std::size_t idx = 0;
        for (auto n : schedule) {
            while (idx < sorted.size() && sorted[idx] <= n) ++idx;
            mr.cumulative_rejection.push_back(static_cast<double>(idx) / nrep);
        }
        mr.power = mr.cumulative_rejection.back();
        for (double q : {0.5, 0.8, 0.9}) {
            const auto v = detail::order_quantile(stops, q);
            mr.stop_time_quantiles[q] = v == UINT64_MAX ? std::nullopt : std::optional<std::uint64_t>(v);
        }
        const double mis = static_cast<double>(missed) / nrep;
        mr.miscoverage_at_stop = mis;
        if (rule.method == SingleArmMethod::BHT && stopped > 0) {
            mr.mean_loss_at_stop = loss / static_cast<double>(stopped);
            mr.mean_posterior_loss_at_stop = posterior_loss / static_cast<double>(stopped);
        }
        per_rule.push_back({{"label", mr.label},
                            {"miscoverage_se", std::sqrt(mis * (1.0 - mis) / nrep)},
                            {"stopped", stopped},
                            {"alpha", rule.cs.alpha},
                            {"rho2", rule.cs.rho2},
                            {"epsilon", rule.epsilon},
                            {"prior", {rule.prior.a, rule.prior.b}}});
        report.methods.push_back(std::move(mr));
    }
    report.extra["rules"] = per_rule;
    report.extra["truth_prior"] = {cfg.truth_a, cfg.truth_b};
    report.extra["theta0"] = cfg.theta0;
    return report;
}

}  // namespace seqab::sim
