#pragma once

#include <cstdint>
#include <optional>

#include "seqab/confseq.hpp"

namespace seqab::design {

struct DesignSpec {
    double theta_h0 = 0.0;
    double theta_h1 = 0.0;      // minimum detectable effect
    double sigma2_guess = 0.0;  // guessed per-observation variance of the effect estimator
    double alpha = 0.05;
    double power = 0.8;
    std::uint64_t population_cap = 1'000'000'000;

    void validate() const;
};

/// How the type-II rate enters the radius function.
enum class PowerQuantile {
    AsPrinted,  // radius at level 1 - power
    OneSided,   // radius at level 2 (1 - power), a one-sided tail of the two-sided radius
};

/// |theta_h1 - theta_h0| - sigma * beta(n, q) >= sigma * beta(n, alpha)
bool design_condition(std::uint64_t n, const DesignSpec& spec, const ConfSeqParams& params,
                      PowerQuantile quantile = PowerQuantile::AsPrinted);

/// Smallest total sample size n <= population_cap meeting the design
/// condition, or nullopt when the cap is too small.  Found by integer
/// bisection; the crossing is re-checked at n and n - 1 and a
/// SolverFailure is raised if the condition is not monotone there.
std::optional<std::uint64_t> hypothesized_sample_size(const DesignSpec& spec,
                                                      const ConfSeqParams& params,
                                                      PowerQuantile quantile = PowerQuantile::AsPrinted);

/// Per-observation IPW variance for a 50/50 binary experiment with rates
/// p0 and p0 + mde.
double variance_guess_binary(double p0, double mde);

/// Classical two-sample z-test size, per arm.
std::uint64_t fixed_horizon_sample_size(double p0, double mde, double alpha, double power);

}  // namespace seqab::design
