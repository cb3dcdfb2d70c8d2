#include "seqab/confseq.hpp"

#include <algorithm>
#include <cmath>

#include "seqab/errors.hpp"

namespace seqab {

void ConfSeqParams::validate() const {
    if (!(alpha > 0.0 && alpha <= 0.5)) {
        throw DomainError("alpha must lie in (0, 0.5]");
    }
    if (!(rho2 > 0.0) || !std::isfinite(rho2)) {
        throw DomainError("rho2 must be positive and finite");
    }
}

double radius_beta(std::uint64_t n, double alpha, double rho2) {
    if (n < 1) {
        throw DomainError("radius_beta: n must be at least 1");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("radius_beta: alpha must lie in (0, 1)");
    }
    if (!(rho2 > 0.0) || !std::isfinite(rho2)) {
        throw DomainError("radius_beta: rho2 must be positive");
    }
    const double nd = static_cast<double>(n);
    const double nr = nd * rho2;
    // log(sqrt(n rho2 + 1) / alpha)
    const double log_term = 0.5 * std::log1p(nr) - std::log(alpha);
    return std::sqrt(2.0 * (nr + 1.0) / (nd * nr) * log_term);
}

double ate_variance_bracket(const TwoArmState& state) {
    const std::uint64_t n0 = state.arm0.count();
    const std::uint64_t n1 = state.arm1.count();
    if (n0 < 1 || n1 < 1) {
        throw InsufficientData("ATE variance needs at least one observation per arm");
    }
    const double n = static_cast<double>(n0 + n1);
    const double m0 = state.arm0.mean();
    const double m1 = state.arm1.mean();
    const double second0 = (n / static_cast<double>(n0)) * (state.arm0.biased_variance() + m0 * m0);
    const double second1 = (n / static_cast<double>(n1)) * (state.arm1.biased_variance() + m1 * m1);
    const double diff = m1 - m0;
    const double bracket = second0 + second1 - diff * diff;
    if (bracket < 0.0) {
        if (bracket < -1e-12 * std::max(1.0, second0 + second1)) {
            throw NumericalGuard("ATE variance bracket is negative beyond rounding");
        }
        return 0.0;
    }
    return bracket;
}

Interval asympcs_ate(const TwoArmState& state, const ConfSeqParams& params) {
    params.validate();
    const std::uint64_t n = state.n();
    if (state.arm0.count() < 1 || state.arm1.count() < 1 || n < 2) {
        throw InsufficientData("asympcs_ate needs both arms observed and n >= 2");
    }
    const double nd = static_cast<double>(n);
    const double variance = nd / (nd - 1.0) * ate_variance_bracket(state);
    const double half = std::sqrt(variance) * radius_beta(n, params.alpha, params.rho2);
    const double center = state.effect();
    return {center - half, center + half};
}

Interval asympcs_mean(const StreamingMoments& arm, const ConfSeqParams& params) {
    params.validate();
    if (arm.count() < 2) {
        throw InsufficientData("asympcs_mean needs at least two observations");
    }
    const double half =
        std::sqrt(arm.biased_variance()) * radius_beta(arm.count(), params.alpha, params.rho2);
    return {arm.mean() - half, arm.mean() + half};
}

Interval asympcs_lift(const TwoArmState& state, const ConfSeqParams& params,
                      std::optional<double> per_arm_alpha) {
    params.validate();
    const double arm_alpha = per_arm_alpha.value_or(params.alpha);
    if (!(arm_alpha > 0.0 && arm_alpha < 1.0)) {
        throw DomainError("asympcs_lift: per-arm alpha must lie in (0, 1)");
    }
    if (state.arm0.count() < 2 || state.arm1.count() < 2) {
        throw InsufficientData("asympcs_lift needs at least two observations per arm");
    }
    const double m0 = state.arm0.mean();
    const double m1 = state.arm1.mean();
    if (!(m0 > 0.0) || !(m1 > 0.0)) {
        throw DomainError("asympcs_lift: lift needs positive sample means in both arms");
    }
    const double r0 = std::sqrt(state.arm0.biased_variance()) *
                      radius_beta(state.arm0.count(), arm_alpha, params.rho2);
    const double r1 = std::sqrt(state.arm1.biased_variance()) *
                      radius_beta(state.arm1.count(), arm_alpha, params.rho2);
    const double low0 = m0 - r0;
    const double up0 = m0 + r0;
    const double low1 = m1 - r1;
    const double up1 = m1 + r1;

    Interval out;
    // Non-negative metrics cannot lose more than everything.
    out.lower = (low1 > 0.0) ? low1 / up0 - 1.0 : -1.0;
    out.upper = (low0 > 0.0) ? up1 / low0 - 1.0 : std::numeric_limits<double>::infinity();
    return out;
}

double msprt_pooled_variance(const TwoArmState& state) {
    const std::uint64_t n0 = state.arm0.count();
    const std::uint64_t n1 = state.arm1.count();
    const std::uint64_t n = n0 + n1;
    if (n0 < 1 || n1 < 1 || n < 3) {
        throw InsufficientData("pooled variance needs both arms observed and n >= 3");
    }
    const double pooled = (state.arm0.m2() + state.arm1.m2()) / static_cast<double>(n - 2);
    return static_cast<double>(n) * pooled *
           (1.0 / static_cast<double>(n0) + 1.0 / static_cast<double>(n1));
}

namespace {

double log_lambda_from(double n, double variance, double estimate, const ConfSeqParams& params,
                       double theta0) {
    if (!(variance > 0.0)) {
        throw InsufficientData("mSPRT needs a positive variance estimate");
    }
    const double nr = n * params.rho2;
    const double d = estimate - theta0;
    return 0.5 * std::log(variance / (nr + variance)) +
           n * nr * d * d / (2.0 * variance * (nr + variance));
}

Interval msprt_interval_from(double n, double variance, double estimate, const ConfSeqParams& params) {
    if (!(variance > 0.0)) {
        throw InsufficientData("mSPRT needs a positive variance estimate");
    }
    const double nr = n * params.rho2;
    // log(sqrt((n rho2 + V) / V) / alpha): exactly where lambda crosses 1/alpha
    const double log_term = 0.5 * std::log((nr + variance) / variance) - std::log(params.alpha);
    const double half = std::sqrt(2.0 * variance * (nr + variance) / (n * nr) * log_term);
    return {estimate - half, estimate + half};
}

double min_p(double prev_p, double log_lambda) {
    if (!(prev_p > 0.0 && prev_p <= 1.0)) {
        throw DomainError("msprt_p_step: previous p must lie in (0, 1]");
    }
    return std::min(prev_p, std::exp(-log_lambda));
}

double one_sample_variance(const StreamingMoments& arm) {
    if (arm.count() < 2) {
        throw InsufficientData("one-sample mSPRT needs at least two observations");
    }
    return arm.unbiased_variance();
}

}  // namespace

double msprt_log_lambda(const TwoArmState& state, const ConfSeqParams& params, double theta0) {
    params.validate();
    const double variance = msprt_pooled_variance(state);
    return log_lambda_from(static_cast<double>(state.n()), variance, state.effect(), params, theta0);
}

double msprt_log_lambda(const StreamingMoments& arm, const ConfSeqParams& params, double theta0) {
    params.validate();
    return log_lambda_from(static_cast<double>(arm.count()), one_sample_variance(arm), arm.mean(),
                           params, theta0);
}

Interval msprt_cs(const TwoArmState& state, const ConfSeqParams& params) {
    params.validate();
    return msprt_interval_from(static_cast<double>(state.n()), msprt_pooled_variance(state),
                               state.effect(), params);
}

Interval msprt_cs(const StreamingMoments& arm, const ConfSeqParams& params) {
    params.validate();
    return msprt_interval_from(static_cast<double>(arm.count()), one_sample_variance(arm),
                               arm.mean(), params);
}

double msprt_p_step(double prev_p, const TwoArmState& state, const ConfSeqParams& params,
                    double theta0) {
    return min_p(prev_p, msprt_log_lambda(state, params, theta0));
}

double msprt_p_step(double prev_p, const StreamingMoments& arm, const ConfSeqParams& params,
                    double theta0) {
    return min_p(prev_p, msprt_log_lambda(arm, params, theta0));
}

const Interval& RunningIntersection::apply(const Interval& next) noexcept {
    const Interval merged{std::max(current_.lower, next.lower), std::min(current_.upper, next.upper)};
    // An empty intersection leaves the previous interval in place.
    if (merged.lower <= merged.upper) {
        current_ = merged;
    }
    return current_;
}

}  // namespace seqab
