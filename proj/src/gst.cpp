#include "seqab/gst.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "seqab/errors.hpp"
#include "seqab/numerics.hpp"

namespace seqab::gst {

double SpendingSchedule::incremental_spend(std::size_t k) const {
    if (k >= cumulative_spend.size()) {
        throw DomainError("incremental_spend: peek index out of range");
    }
    return k == 0 ? cumulative_spend[0] : cumulative_spend[k] - cumulative_spend[k - 1];
}

void to_json(nlohmann::json& j, const SpendingSchedule& s) {
    j = nlohmann::json{{"alpha", s.alpha},
                       {"fractions", s.fractions},
                       {"spends", s.cumulative_spend},
                       {"boundaries", s.boundaries},
                       {"grid_points", s.grid_points}};
}

void from_json(const nlohmann::json& j, SpendingSchedule& s) {
    s.alpha = j.value("alpha", 0.05);
    j.at("fractions").get_to(s.fractions);
    j.at("spends").get_to(s.cumulative_spend);
    j.at("boundaries").get_to(s.boundaries);
    s.grid_points = j.value("grid_points", std::size_t{0});
    if (s.fractions.size() != s.cumulative_spend.size() || s.fractions.size() != s.boundaries.size()) {
        throw ConfigError("schedule arrays must have equal length");
    }
}

double pocock_spend(double t, double alpha) {
    if (!(t > 0.0 && t <= 1.0)) {
        throw DomainError("pocock_spend: t must lie in (0, 1]");
    }
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("pocock_spend: alpha must lie in (0, 1)");
    }
    return alpha * std::log1p((std::numbers::e - 1.0) * t);
}

std::vector<double> equally_spaced_fractions(std::size_t peeks) {
    if (peeks == 0) {
        throw DomainError("equally_spaced_fractions: need at least one peek");
    }
    std::vector<double> out(peeks);
    for (std::size_t k = 0; k < peeks; ++k) {
        out[k] = static_cast<double>(k + 1) / static_cast<double>(peeks);
    }
    out.back() = 1.0;
    return out;
}

namespace {

void validate_fractions(std::span<const double> fractions) {
    if (fractions.empty() || fractions.size() > 1000) {
        throw DomainError("between 1 and 1000 peeks are supported");
    }
    double prev = 0.0;
    for (double t : fractions) {
        if (!(t > prev) || t > 1.0) {
            throw DomainError("peek fractions must be strictly increasing within (0, 1]");
        }
        prev = t;
    }
    if (fractions.back() != 1.0) {
        throw DomainError("the last peek fraction must be 1");
    }
}

// Density of the partial sum S(t) restricted to the continuation region,
// sampled on a uniform Simpson grid over [-half, half].
struct Stage {
    double half = 0.0;
    std::vector<double> weighted;  // simpson weight * density at node

    std::size_t size() const noexcept { return weighted.size(); }
    double node(std::size_t i) const noexcept {
        const double g = static_cast<double>(size() - 1);
        return -half + 2.0 * half * static_cast<double>(i) / g;
    }
};

double simpson_weight(std::size_t i, std::size_t intervals, double h) {
    if (i == 0 || i == intervals) return h / 3.0;
    return (i % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
}

Stage first_stage(double t, double boundary, std::size_t intervals) {
    Stage st;
    const double sd = std::sqrt(t);
    st.half = boundary * sd;
    st.weighted.resize(intervals + 1);
    const double h = 2.0 * st.half / static_cast<double>(intervals);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double s = st.node(i);
        st.weighted[i] = simpson_weight(i, intervals, h) * normal_pdf(s / sd) / sd;
    }
    return st;
}

// Null probability of leaving (-c sqrt(t), c sqrt(t)) at this peek
// without having left earlier.
double crossing_mass(const Stage& prev, double t, double increment_sd, double c) {
    const double edge = c * std::sqrt(t);
    double total = 0.0;
    for (std::size_t j = 0; j < prev.size(); ++j) {
        const double u = prev.node(j);
        total += prev.weighted[j] *
                 (normal_cdf((-edge - u) / increment_sd) + normal_sf((edge - u) / increment_sd));
    }
    return total;
}

Stage propagate(const Stage& prev, double t, double increment_sd, double boundary,
                std::size_t intervals) {
    Stage next;
    next.half = boundary * std::sqrt(t);
    next.weighted.assign(intervals + 1, 0.0);
    const double h_next = 2.0 * next.half / static_cast<double>(intervals);
    const double h_prev = 2.0 * prev.half / static_cast<double>(prev.size() - 1);
    const double window = 8.0 * increment_sd;
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double s = next.node(i);
        // prev nodes u with |s - u| <= window
        const double lo_u = s - window;
        const double hi_u = s + window;
        const auto last = static_cast<long long>(prev.size()) - 1;
        const long long j0 =
            std::max(0LL, static_cast<long long>(std::ceil((lo_u + prev.half) / h_prev)));
        const long long j1 =
            std::min(last, static_cast<long long>(std::floor((hi_u + prev.half) / h_prev)));
        double density = 0.0;
        for (long long j = j0; j <= j1; ++j) {
            const auto idx = static_cast<std::size_t>(j);
            density += prev.weighted[idx] * normal_pdf((s - prev.node(idx)) / increment_sd);
        }
        density /= increment_sd;
        next.weighted[i] = simpson_weight(i, intervals, h_next) * density;
    }
    return next;
}

double solve_boundary(const Stage& prev, double t, double increment_sd, double target) {
    constexpr double lo0 = 0.0;
    constexpr double hi0 = 10.0;
    const double at_lo = crossing_mass(prev, t, increment_sd, lo0);
    const double at_hi = crossing_mass(prev, t, increment_sd, hi0);
    if (!(at_lo >= target && at_hi <= target)) {
        throw SolverFailure("boundary bisection does not bracket within z in [0, 10]");
    }
    double lo = lo0;
    double hi = hi0;
    while (hi - lo > 1e-11) {
        const double mid = 0.5 * (lo + hi);
        if (crossing_mass(prev, t, increment_sd, mid) > target) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

SpendingSchedule solve_at(std::span<const double> fractions, double alpha, std::size_t intervals) {
    SpendingSchedule out;
    out.alpha = alpha;
    out.fractions.assign(fractions.begin(), fractions.end());
    out.grid_points = intervals;
    for (double t : fractions) {
        out.cumulative_spend.push_back(pocock_spend(t, alpha));
    }
    out.cumulative_spend.back() = alpha;

    const double first_spend = out.cumulative_spend[0];
    const double c1 = normal_quantile(1.0 - 0.5 * first_spend);
    out.boundaries.push_back(c1);
    Stage stage = first_stage(fractions[0], c1, intervals);
    for (std::size_t k = 1; k < fractions.size(); ++k) {
        const double t = fractions[k];
        const double increment_sd = std::sqrt(t - fractions[k - 1]);
        const double target = out.cumulative_spend[k] - out.cumulative_spend[k - 1];
        const double c = solve_boundary(stage, t, increment_sd, target);
        out.boundaries.push_back(c);
        if (k + 1 < fractions.size()) {
            stage = propagate(stage, t, increment_sd, c, intervals);
        }
    }
    return out;
}

double max_boundary_gap(const SpendingSchedule& a, const SpendingSchedule& b) {
    double gap = 0.0;
    for (std::size_t k = 0; k < a.boundaries.size(); ++k) {
        gap = std::max(gap, std::fabs(a.boundaries[k] - b.boundaries[k]));
    }
    return gap;
}

}  // namespace

SpendingSchedule compute_boundaries(std::span<const double> fractions, double alpha,
                                    const BoundaryOptions& options) {
    validate_fractions(fractions);
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw DomainError("compute_boundaries: alpha must lie in (0, 1)");
    }
    std::size_t intervals = options.grid_points + (options.grid_points % 2);
    SpendingSchedule coarse = solve_at(fractions, alpha, intervals);
    if (!options.check_resolution || fractions.size() == 1) {
        return coarse;
    }
    while (2 * intervals <= options.max_grid_points) {
        SpendingSchedule fine = solve_at(fractions, alpha, 2 * intervals);
        if (max_boundary_gap(coarse, fine) <= options.resolution_tolerance) {
            return fine;
        }
        coarse = std::move(fine);
        intervals *= 2;
    }
    throw SolverFailure("boundaries did not stabilize under grid refinement");
}

std::vector<double> crossing_probabilities(std::span<const double> fractions,
                                           std::span<const double> boundaries,
                                           std::size_t grid_points) {
    validate_fractions(fractions);
    if (fractions.size() != boundaries.size()) {
        throw DomainError("crossing_probabilities: one boundary per peek required");
    }
    const std::size_t intervals = grid_points + (grid_points % 2);
    std::vector<double> out;
    out.push_back(2.0 * normal_sf(boundaries[0]));
    Stage stage = first_stage(fractions[0], boundaries[0], intervals);
    for (std::size_t k = 1; k < fractions.size(); ++k) {
        const double t = fractions[k];
        const double increment_sd = std::sqrt(t - fractions[k - 1]);
        out.push_back(crossing_mass(stage, t, increment_sd, boundaries[k]));
        if (k + 1 < fractions.size()) {
            stage = propagate(stage, t, increment_sd, boundaries[k], intervals);
        }
    }
    return out;
}

LdmDecision ldm_decide(std::span<const std::pair<std::uint64_t, double>> trajectory,
                       const SpendingSchedule& schedule) {
    if (trajectory.size() != schedule.peeks()) {
        throw ConfigError("trajectory has " + std::to_string(trajectory.size()) +
                          " peeks but the schedule has " + std::to_string(schedule.peeks()));
    }
    LdmDecision out;
    for (std::size_t k = 0; k < trajectory.size(); ++k) {
        out.z = trajectory[k].second;
        if (std::fabs(trajectory[k].second) >= schedule.boundaries[k]) {
            out.reject = true;
            out.peek_index = k;
            out.n = trajectory[k].first;
            return out;
        }
    }
    return out;
}

}  // namespace seqab::gst
