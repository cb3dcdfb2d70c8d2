#pragma once

#include <cstdint>
#include <limits>
#include <optional>

#include "seqab/numerics.hpp"

namespace seqab {

/// Level and mixture tuning shared by every confidence-sequence radius.
struct ConfSeqParams {
    double alpha = 0.05;
    double rho2 = 1e-3;

    // Throws DomainError unless alpha in (0, 0.5] and rho2 > 0.
    void validate() const;
};

/// Closed interval on the extended real line.
struct Interval {
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();

    bool contains(double value) const noexcept { return lower <= value && value <= upper; }
    bool excludes(double value) const noexcept { return !contains(value); }
    double width() const noexcept { return upper - lower; }

    friend bool operator==(const Interval&, const Interval&) = default;
};

/// Per-arm accumulators of a two-arm experiment; arm1 is the treatment.
struct TwoArmState {
    StreamingMoments arm0;
    StreamingMoments arm1;

    std::uint64_t n() const noexcept { return arm0.count() + arm1.count(); }
    double effect() const noexcept { return arm1.mean() - arm0.mean(); }

    void merge(const TwoArmState& other) noexcept {
        arm0.merge(other.arm0);
        arm1.merge(other.arm1);
    }

    friend bool operator==(const TwoArmState&, const TwoArmState&) = default;
};

/// Mixture radius sqrt(2(n rho2 + 1) / (n^2 rho2) * log(sqrt(n rho2 + 1) / alpha)).
/// `alpha` may be any level in (0, 1) here so the design module can pass
/// the type-II rate.
double radius_beta(std::uint64_t n, double alpha, double rho2);

/// Bracketed per-observation variance of the empirical-propensity IPW
/// estimator, before the n/(n-1) factor:
///   (n/n0)(s0^2 + m0^2) + (n/n1)(s1^2 + m1^2) - (m1 - m0)^2
/// with biased per-arm variances s_i^2.  Clamped to 0 when negative by
/// rounding only; throws NumericalGuard on larger negatives.
double ate_variance_bracket(const TwoArmState& state);

/// Asymptotic CS for m1 - m0 with empirical propensities n_i / n.
Interval asympcs_ate(const TwoArmState& state, const ConfSeqParams& params);

/// One-sample asymptotic CS for a mean, using the sample standard deviation.
Interval asympcs_mean(const StreamingMoments& arm, const ConfSeqParams& params);

/// Lift CS for m1/m0 - 1 built from per-arm one-sided bounds.  Each arm's
/// radius uses `per_arm_alpha` (defaults to params.alpha).
Interval asympcs_lift(const TwoArmState& state, const ConfSeqParams& params,
                      std::optional<double> per_arm_alpha = std::nullopt);

/// n * s_p^2 * (1/n0 + 1/n1), s_p^2 the within-arm pooled sample variance.
double msprt_pooled_variance(const TwoArmState& state);

/// log of the mixture likelihood ratio for effect theta0.
double msprt_log_lambda(const TwoArmState& state, const ConfSeqParams& params, double theta0);
/// One-sample variant over a single arm's mean.
double msprt_log_lambda(const StreamingMoments& arm, const ConfSeqParams& params, double theta0);

/// Inverted mSPRT: the set of theta0 with lambda(theta0) < 1/alpha.
Interval msprt_cs(const TwoArmState& state, const ConfSeqParams& params);
Interval msprt_cs(const StreamingMoments& arm, const ConfSeqParams& params);

/// p_n = min(p_{n-1}, 1 / lambda_n); start the recursion from p_0 = 1.
double msprt_p_step(double prev_p, const TwoArmState& state, const ConfSeqParams& params,
                    double theta0);
double msprt_p_step(double prev_p, const StreamingMoments& arm, const ConfSeqParams& params,
                    double theta0);

/// Optional running intersection of successive intervals.  Never used by
/// the default decision rules.
class RunningIntersection {
public:
    const Interval& apply(const Interval& next) noexcept;
    const Interval& current() const noexcept { return current_; }

private:
    Interval current_{};
};

}  // namespace seqab
