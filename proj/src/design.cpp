#include "seqab/design.hpp"

#include <cmath>

#include "seqab/errors.hpp"
#include "seqab/numerics.hpp"

namespace seqab::design {

void DesignSpec::validate() const {
    if (!(std::fabs(theta_h1 - theta_h0) > 0.0) || !std::isfinite(theta_h1)) {
        throw DomainError("the alternative effect must differ from the null");
    }
    if (!(sigma2_guess > 0.0) || !std::isfinite(sigma2_guess)) {
        throw DomainError("variance guess must be positive");
    }
    if (!(alpha > 0.0 && alpha < power && power < 1.0)) {
        throw DomainError("need 0 < alpha < power < 1");
    }
    if (population_cap < 1) {
        throw DomainError("population cap must be positive");
    }
}

namespace {

double type2_level(const DesignSpec& spec, PowerQuantile quantile) {
    const double beta = 1.0 - spec.power;
    if (quantile == PowerQuantile::OneSided) {
        if (!(2.0 * beta < 1.0)) {
            throw DomainError("one-sided power quantile needs power > 0.5");
        }
        return 2.0 * beta;
    }
    return beta;
}

}  // namespace

bool design_condition(std::uint64_t n, const DesignSpec& spec, const ConfSeqParams& params,
                      PowerQuantile quantile) {
    const double sigma = std::sqrt(spec.sigma2_guess);
    const double effect = std::fabs(spec.theta_h1 - spec.theta_h0);
    const double power_side = effect - sigma * radius_beta(n, type2_level(spec, quantile), params.rho2);
    return power_side >= sigma * radius_beta(n, spec.alpha, params.rho2);
}

std::optional<std::uint64_t> hypothesized_sample_size(const DesignSpec& spec,
                                                      const ConfSeqParams& params,
                                                      PowerQuantile quantile) {
    spec.validate();
    if (!(params.rho2 > 0.0)) {
        throw DomainError("rho2 must be positive");
    }
    if (!design_condition(spec.population_cap, spec, params, quantile)) {
        return std::nullopt;
    }
    std::uint64_t lo = 1;  // invariant: answer in [lo, hi]
    std::uint64_t hi = spec.population_cap;
    while (lo < hi) {
        const std::uint64_t mid = lo + (hi - lo) / 2;
        if (design_condition(mid, spec, params, quantile)) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    if (!design_condition(lo, spec, params, quantile) ||
        (lo > 1 && design_condition(lo - 1, spec, params, quantile))) {
        throw SolverFailure("design condition is not monotone around the bisection root");
    }
    return lo;
}

double variance_guess_binary(double p0, double mde) {
    const double p1 = p0 + mde;
    if (!(p0 > 0.0 && p0 < 1.0) || !(p1 > 0.0 && p1 < 1.0)) {
        throw DomainError("p0 and p0 + mde must lie in (0, 1)");
    }
    const double v0 = p0 * (1.0 - p0);
    const double v1 = p1 * (1.0 - p1);
    return 2.0 * (v0 + p0 * p0) + 2.0 * (v1 + p1 * p1) - mde * mde;
}

std::uint64_t fixed_horizon_sample_size(double p0, double mde, double alpha, double power) {
    const double p1 = p0 + mde;
    if (!(p0 > 0.0 && p0 < 1.0) || !(p1 > 0.0 && p1 < 1.0) || mde == 0.0) {
        throw DomainError("need nonzero mde with p0 and p0 + mde in (0, 1)");
    }
    if (!(alpha > 0.0 && alpha < 1.0) || !(power > 0.0 && power < 1.0)) {
        throw DomainError("alpha and power must lie in (0, 1)");
    }
    const double z = normal_quantile(1.0 - 0.5 * alpha) + normal_quantile(power);
    const double n = z * z * (p0 * (1.0 - p0) + p1 * (1.0 - p1)) / (mde * mde);
    // Guard against ceil() of a value a few ulps above an integer.
    return static_cast<std::uint64_t>(std::ceil(n * (1.0 - 1e-12)));
}

}  // namespace seqab::design
