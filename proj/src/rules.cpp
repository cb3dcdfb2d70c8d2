#include "seqab/rules.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <limits>
#include <utility>

#include "seqab/errors.hpp"
#include "seqab/numerics.hpp"

namespace seqab::rules {

namespace {

constexpr std::array<std::pair<Method, std::string_view>, 9> kNames{{
    {Method::FHT, "FHT"},
    {Method::FHTPeeking, "FHT-peeking"},
    {Method::LDM, "LDM"},
    {Method::MSPRT, "mSPRT"},
    {Method::AsympCS, "AsympCS"},
    {Method::AsympCSLift, "AsympCS-lift"},
    {Method::BHTUninformed, "BHT-uninformed"},
    {Method::BHTMatched, "BHT-matched"},
    {Method::BFUninformed, "BF-uninformed"},
}};

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

Evaluation interval_eval(const Interval& iv, double center, double theta0) {
    Evaluation ev;
    ev.valid = true;
    ev.has_interval = true;
    ev.center = center;
    ev.lower = iv.lower;
    ev.upper = iv.upper;
    ev.crossed = iv.excludes(theta0);
    return ev;
}

}  // namespace

std::string_view method_name(Method m) noexcept {
    for (const auto& [method, name] : kNames) {
        if (method == m) return name;
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    const std::string key = lower(name);
    for (const auto& [method, canonical] : kNames) {
        if (key == lower(canonical)) return method;
    }
    if (key == "msprt") return Method::MSPRT;
    if (key == "lift" || key == "asympcs_lift") return Method::AsympCSLift;
    if (key == "bht" || key == "bht_uninformed") return Method::BHTUninformed;
    if (key == "bf" || key == "bayes-factor" || key == "bf_uninformed") return Method::BFUninformed;
    if (key == "fht_peeking") return Method::FHTPeeking;
    throw ConfigError("unknown method '" + std::string(name) + "'");
}

std::optional<double> z_statistic(const TwoArmState& state, double theta0) {
    if (state.arm0.count() < 2 || state.arm1.count() < 2) {
        return std::nullopt;
    }
    const double var = state.arm0.unbiased_variance() / static_cast<double>(state.arm0.count()) +
                       state.arm1.unbiased_variance() / static_cast<double>(state.arm1.count());
    const double diff = state.effect() - theta0;
    if (!(var > 0.0)) {
        if (diff == 0.0) return 0.0;
        return diff > 0.0 ? std::numeric_limits<double>::infinity()
                          : -std::numeric_limits<double>::infinity();
    }
    return diff / std::sqrt(var);
}

Monitor::Monitor(RuleConfig config) : config_(std::move(config)) {
    config_.cs.validate();
    if (config_.method == Method::BHTUninformed) {
        config_.bht.prior_a = 1.0;
        config_.bht.prior_b = 1.0;
    }
    if (config_.method == Method::BHTUninformed || config_.method == Method::BHTMatched) {
        config_.bht.validate();
    }
    if (config_.method == Method::BFUninformed) {
        config_.bf.validate();
    }
    if (config_.method == Method::FHT && config_.fht_horizon == 0) {
        throw ConfigError("FHT needs a planned horizon");
    }
    if (config_.method == Method::LDM) {
        if (!config_.schedule || config_.peek_n.size() != config_.schedule->peeks()) {
            throw ConfigError("LDM needs a schedule and one sample size per peek");
        }
    }
}

Evaluation Monitor::evaluate(const TwoArmState& state) {
    const double theta0 = config_.theta0;
    const double z_crit = normal_quantile(1.0 - 0.5 * config_.cs.alpha);
    try {
        switch (config_.method) {
            case Method::AsympCS: {
                if (state.arm0.count() < 1 || state.arm1.count() < 1 || state.n() < 2) return {};
                return interval_eval(asympcs_ate(state, config_.cs), state.effect(), theta0);
            }
            case Method::AsympCSLift: {
                const Interval iv = asympcs_lift(state, config_.cs);
                return interval_eval(iv, state.arm1.mean() / state.arm0.mean() - 1.0, theta0);
            }
            case Method::MSPRT: {
                const double p = msprt_p_step(p_value_, state, config_.cs, theta0);
                p_value_ = p;
                Evaluation ev = interval_eval(msprt_cs(state, config_.cs), state.effect(), theta0);
                ev.statistic = p;
                ev.crossed = p <= config_.cs.alpha;
                return ev;
            }
            case Method::FHTPeeking:
            case Method::FHT: {
                if (config_.method == Method::FHT) {
                    if (fht_done_ || state.n() < config_.fht_horizon) return {};
                    fht_done_ = true;
                }
                const auto z = z_statistic(state, 0.0);
                if (!z) return {};
                const double se = std::sqrt(
                    state.arm0.unbiased_variance() / static_cast<double>(state.arm0.count()) +
                    state.arm1.unbiased_variance() / static_cast<double>(state.arm1.count()));
                const Interval iv{state.effect() - z_crit * se, state.effect() + z_crit * se};
                Evaluation ev = interval_eval(iv, state.effect(), theta0);
                ev.statistic = *z;
                return ev;
            }
            case Method::LDM: {
                if (next_peek_ >= config_.peek_n.size() || state.n() < config_.peek_n[next_peek_]) {
                    return {};
                }
                const std::size_t k = next_peek_++;
                const auto z = z_statistic(state, theta0);
                Evaluation ev;
                ev.valid = z.has_value();
                ev.statistic = z.value_or(0.0);
                ev.crossed = z && std::fabs(*z) >= config_.schedule->boundaries[k];
                return ev;
            }
            case Method::BHTUninformed:
            case Method::BHTMatched: {
                const bayes::BhtDecision d = bayes::bht_decide(state, config_.bht, config_.loss);
                Evaluation ev;
                ev.valid = true;
                ev.statistic = std::min(d.loss_control, d.loss_treatment);
                ev.center = d.chosen == bayes::Arm::Treatment ? 1.0 : 0.0;
                ev.crossed = d.stop;
                return ev;
            }
            case Method::BFUninformed: {
                const auto [c0, n0] = bayes::binary_counts(state.arm0);
                const auto [c1, n1] = bayes::binary_counts(state.arm1);
                Evaluation ev;
                ev.valid = true;
                ev.statistic = bayes::bayes_factor(c0, n0, c1, n1, config_.bf);
                ev.crossed = ev.statistic >= config_.bf.odds_threshold;
                return ev;
            }
        }
    } catch (const InsufficientData&) {
        return {};
    } catch (const DomainError&) {
        // Lift is undefined while an arm mean is still zero.
        if (config_.method == Method::AsympCSLift) return {};
        throw;
    }
    return {};
}

}  // namespace seqab::rules
