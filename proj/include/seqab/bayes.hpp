#pragma once

#include <cstdint>
#include <utility>

#include "seqab/confseq.hpp"

namespace seqab::bayes {

struct BetaPosterior {
    double a = 1.0;
    double b = 1.0;

    void validate() const;
    double mean() const noexcept { return a / (a + b); }
    /// Conjugate update with `successes` conversions among `trials`.
    BetaPosterior updated(std::uint64_t successes, std::uint64_t trials) const;

    friend bool operator==(const BetaPosterior&, const BetaPosterior&) = default;
};

struct BhtConfig {
    double prior_a = 1.0;
    double prior_b = 1.0;
    double epsilon = 1e-4;  // threshold of caring

    void validate() const;
};

struct BfConfig {
    double prior_a = 1.0;
    double prior_b = 1.0;
    double odds_threshold = 20.0;

    void validate() const;
};

// Below: E[max(theta0 - theta, 0)], the expected shortfall under theta0.
// Above: E[max(theta - theta0, 0)].
enum class LossSide { Below, Above };

/// Closed form through regularized incomplete beta functions.
double single_arm_expected_loss(const BetaPosterior& post, double theta0, LossSide side);

enum class Arm { Control = 0, Treatment = 1 };

enum class LossBackend {
    Auto,        // exact when every parameter is an integer, otherwise Monte Carlo
    Exact,       // series over integer-parameter Beta identities
    MonteCarlo,  // seeded Monte Carlo over posterior pairs
};

struct LossOptions {
    LossBackend backend = LossBackend::Auto;
    std::uint64_t mc_pairs = 1'000'000;
    std::uint64_t seed = 0x5eed'ab'0001ULL;
};

struct LossEstimate {
    double value = 0.0;
    double std_error = 0.0;  // zero for the exact backend
    bool exact = false;
};

/// P(X > Y) for independent X ~ post_x, Y ~ post_y; needs at least one
/// integer parameter among the four to use the finite series.
double prob_greater(const BetaPosterior& post_x, const BetaPosterior& post_y);

/// Expected linear loss of shipping `choice`:
///   Control:   E[max(theta1 - theta0, 0)]
///   Treatment: E[max(theta0 - theta1, 0)]
LossEstimate two_arm_expected_loss(const BetaPosterior& post0, const BetaPosterior& post1, Arm choice,
                                   const LossOptions& options = {});

struct BhtDecision {
    bool stop = false;
    Arm chosen = Arm::Control;
    double loss_control = 0.0;    // loss of choosing arm 0
    double loss_treatment = 0.0;  // loss of choosing arm 1
};

BhtDecision bht_decide(std::uint64_t c0, std::uint64_t n0, std::uint64_t c1, std::uint64_t n1,
                       const BhtConfig& cfg, const LossOptions& options = {});
/// Throws DomainError unless both arms hold binary outcomes.
BhtDecision bht_decide(const TwoArmState& state, const BhtConfig& cfg, const LossOptions& options = {});

struct SingleArmBhtDecision {
    bool stop = false;
    bool above = false;  // decided theta > theta0
    double loss = 0.0;   // posterior expected loss of that decision
};

/// Single-arm rule: decide the side of theta0 the posterior mean falls on
/// and stop once the expected loss of that decision drops below epsilon.
SingleArmBhtDecision single_arm_bht_decide(const BetaPosterior& post, double theta0, double epsilon);

/// Recovers (successes, trials) from a binary accumulator; throws
/// DomainError for non-binary data.
std::pair<std::uint64_t, std::uint64_t> binary_counts(const StreamingMoments& arm);

double log_bayes_factor(std::uint64_t c0, std::uint64_t n0, std::uint64_t c1, std::uint64_t n1,
                        const BfConfig& cfg);
double bayes_factor(std::uint64_t c0, std::uint64_t n0, std::uint64_t c1, std::uint64_t n1,
                    const BfConfig& cfg);

}  // namespace seqab::bayes
