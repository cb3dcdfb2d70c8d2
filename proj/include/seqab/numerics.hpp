#pragma once

#include <cstdint>

namespace seqab {

/// Mergeable count / mean / sum-of-squared-deviations accumulator.
///
/// Updates use the one-pass Welford recurrence and merges use the
/// pairwise (Chan et al.) combination, so a stream split into shards and
/// merged in any order reproduces the single-stream result up to rounding.
class StreamingMoments {
public:
    constexpr StreamingMoments() = default;

    /// Accumulator summarizing `successes` ones among `count` binary outcomes.
    static StreamingMoments from_binary(std::uint64_t count, std::uint64_t successes);

    /// Accumulator built directly from its sufficient statistics.
    static StreamingMoments from_parts(std::uint64_t count, double mean, double m2);

    void push(double y) noexcept;
    void merge(const StreamingMoments& other) noexcept;

    std::uint64_t count() const noexcept { return count_; }
    double mean() const noexcept { return mean_; }
    double m2() const noexcept { return m2_; }

    // m2 / count; requires count >= 1.
    double biased_variance() const;
    // m2 / (count - 1); requires count >= 2.
    double unbiased_variance() const;

    friend bool operator==(const StreamingMoments&, const StreamingMoments&) = default;

private:
    std::uint64_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

StreamingMoments update(StreamingMoments acc, double y) noexcept;
StreamingMoments merge(StreamingMoments a, const StreamingMoments& b) noexcept;

double normal_cdf(double x) noexcept;
// Upper tail 1 - normal_cdf(x), accurate far into the tail.
double normal_sf(double x) noexcept;
double normal_pdf(double x) noexcept;
/// Inverse of normal_cdf on (0, 1); throws DomainError elsewhere.
double normal_quantile(double p);

double log_beta(double a, double b);

/// Regularized incomplete beta I_x(a, b).
double reg_inc_beta(double x, double a, double b);

/// Inverse of reg_inc_beta in x, by safeguarded bisection.
double beta_quantile(double p, double a, double b);

}  // namespace seqab
