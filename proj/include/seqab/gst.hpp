#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace seqab::gst {

/// Two-sided Lan-DeMets boundaries for a pre-registered set of peeks.
struct SpendingSchedule {
    double alpha = 0.05;
    std::vector<double> fractions;         // information fractions t_k, last = 1
    std::vector<double> cumulative_spend;  // alpha(t_k)
    std::vector<double> boundaries;        // z thresholds
    std::size_t grid_points = 0;           // resolution that passed the invariance check

    std::size_t peeks() const noexcept { return fractions.size(); }
    /// alpha(t_k) - alpha(t_{k-1})
    double incremental_spend(std::size_t k) const;
};

void to_json(nlohmann::json& j, const SpendingSchedule& s);
void from_json(const nlohmann::json& j, SpendingSchedule& s);

/// Pocock-type spending alpha * ln(1 + (e - 1) t).
double pocock_spend(double t, double alpha);

std::vector<double> equally_spaced_fractions(std::size_t peeks);

struct BoundaryOptions {
    std::size_t grid_points = 512;     // Simpson intervals across the continuation region
    std::size_t max_grid_points = 8192;
    double resolution_tolerance = 1e-4;  // max boundary change when the grid is doubled
    bool check_resolution = true;
};

/// Boundaries whose null first-crossing probability at every peek equals
/// the incremental Pocock spend.  The density of the standardized partial
/// sum on the continuation region is propagated peek to peek by
/// convolution with the Gaussian increment.
SpendingSchedule compute_boundaries(std::span<const double> fractions, double alpha,
                                    const BoundaryOptions& options = {});

/// Null probability of first crossing at each peek for given boundaries,
/// using the same recursion (exposed for verification).
std::vector<double> crossing_probabilities(std::span<const double> fractions,
                                           std::span<const double> boundaries,
                                           std::size_t grid_points = 1024);

struct LdmDecision {
    bool reject = false;
    std::optional<std::size_t> peek_index;  // zero-based
    std::optional<std::uint64_t> n;
    double z = 0.0;  // statistic at the deciding (or last) peek
};

/// Rejects at the first peek whose |z| reaches its boundary.
LdmDecision ldm_decide(std::span<const std::pair<std::uint64_t, double>> trajectory,
                       const SpendingSchedule& schedule);

}  // namespace seqab::gst
