#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seqab/bayes.hpp"
#include "seqab/confseq.hpp"
#include "seqab/gst.hpp"

namespace seqab::rules {

// Every two-arm stopping rule known to the engine and the simulation lab.
enum class Method {
    FHT,             // single z-test at the planned horizon
    FHTPeeking,      // the same z-test evaluated at every look
    LDM,             // Lan-DeMets boundaries at pre-registered peeks
    MSPRT,           // mixture SPRT p-process
    AsympCS,         // asymptotic CS for the ATE
    AsympCSLift,     // asymptotic CS for the lift
    BHTUninformed,   // expected-loss rule, Beta(1, 1) priors
    BHTMatched,      // expected-loss rule, configured priors
    BFUninformed,    // Bayes factor rule
};

std::string_view method_name(Method m) noexcept;
/// Accepts the canonical names ("AsympCS", "FHT-peeking", ...) and the
/// lower-case CLI spellings ("asympcs", "fht-peeking", "bf", ...).
Method parse_method(std::string_view name);

struct RuleConfig {
    Method method = Method::AsympCS;
    ConfSeqParams cs{};
    double theta0 = 0.0;
    bayes::BhtConfig bht{};
    bayes::BfConfig bf{};
    bayes::LossOptions loss{};
    // FHT only: planned total sample size.
    std::uint64_t fht_horizon = 0;
    // LDM only: boundaries and the total sample size at each peek.
    std::shared_ptr<const gst::SpendingSchedule> schedule;
    std::vector<std::uint64_t> peek_n;
};

/// Snapshot result.  `valid` is false when the state does not yet hold
/// enough data for the rule (or the rule is not scheduled at this n).
struct Evaluation {
    bool valid = false;
    bool crossed = false;
    bool has_interval = false;
    double center = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double statistic = 0.0;  // z, p, Bayes factor or expected loss depending on the rule
};

/// Two-sample z statistic (m1 - m0) / sqrt(v0/n0 + v1/n1) with unbiased
/// variances; nullopt without two observations per arm.
std::optional<double> z_statistic(const TwoArmState& state, double theta0 = 0.0);

/// Stateful per-experiment evaluator.  State carried between snapshots is
/// limited to what the rule itself defines (the mSPRT p-process, the next
/// LDM peek, whether the single FHT look happened).
class Monitor {
public:
    explicit Monitor(RuleConfig config);

    Evaluation evaluate(const TwoArmState& state);
    const RuleConfig& config() const noexcept { return config_; }

private:
    RuleConfig config_;
    double p_value_ = 1.0;
    std::size_t next_peek_ = 0;
    bool fht_done_ = false;
};

}  // namespace seqab::rules
