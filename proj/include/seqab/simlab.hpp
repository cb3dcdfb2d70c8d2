#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "seqab/bayes.hpp"
#include "seqab/confseq.hpp"
#include "seqab/rules.hpp"

namespace seqab::sim {

/// Fixed-horizon design used to size FHT / LDM and to express horizons
/// as multiples of the classical sample size.
struct FhtDesign {
    double p0 = 0.1;
    double mde = 0.01;
    double alpha = 0.05;
    double power = 0.8;

    std::uint64_t per_arm() const;
    std::uint64_t total() const { return 2 * per_arm(); }
};

/// Declarative two-arm Bernoulli study.  Sample sizes count observations
/// over both arms.
struct SimStudyConfig {
    std::string study = "custom";
    std::vector<rules::Method> methods{rules::Method::AsympCS};
    double p0 = 0.1;
    double p1 = 0.1;
    double allocation = 0.5;  // probability an observation lands in arm 1
    std::uint64_t replications = 2000;
    std::uint64_t horizon = 0;            // 0 -> horizon_fht_multiple * fht.total()
    double horizon_fht_multiple = 3.0;
    std::uint64_t peek_every = 0;         // 0 -> max(1, horizon / 500)
    std::uint64_t master_seed = 1;
    ConfSeqParams cs{};
    FhtDesign fht{};
    std::size_t ldm_peeks = 100;
    bayes::BhtConfig bht{};          // BHT-uninformed threshold (priors forced to 1, 1)
    bayes::BhtConfig bht_matched{};  // BHT-matched priors and threshold
    bayes::BfConfig bf{};
    double mde_misspecification_factor = 1.0;
    unsigned threads = 0;  // 0 -> hardware concurrency
    bool stop_when_decided = true;
    std::vector<std::uint64_t> extra_peeks;  // looks added to the regular grid

    // Study grids read by the CLI driver.
    std::vector<double> horizon_multiples{1.0, 2.0, 3.0};
    std::vector<double> lifts{0.05, 0.1, 0.2, 0.3};
    std::vector<double> rho2_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
    std::vector<double> effects{0.005, 0.0075, 0.01, 0.015, 0.02};

    void validate() const;
    std::uint64_t resolved_horizon() const;
    std::uint64_t resolved_peek_every() const;
};

void from_json(const nlohmann::json& j, SimStudyConfig& cfg);
void to_json(nlohmann::json& j, const SimStudyConfig& cfg);

struct MethodReport {
    std::string method;  // canonical method name
    std::string label;   // method plus study variation, used as the CSV key
    std::vector<std::uint64_t> peek_n;
    std::vector<double> cumulative_rejection;
    double power = 0.0;  // rejection fraction at the last peek
    // quantile -> stopping time; nullopt when the quantile is censored
    std::map<double, std::optional<std::uint64_t>> stop_time_quantiles;
    std::optional<double> miscoverage_at_stop;
    std::optional<double> mean_loss_at_stop;
    std::optional<double> mean_posterior_loss_at_stop;
    std::vector<std::pair<double, double>> calibration_pairs;  // (true effect, inferred at stop)

    /// Cumulative rejection fraction at total sample size n.
    double rejection_at(std::uint64_t n) const;
};

struct SimReport {
    std::string study;
    std::uint64_t replications = 0;
    std::uint64_t horizon = 0;
    std::uint64_t peek_every = 0;
    std::uint64_t fht_total = 0;
    std::uint64_t master_seed = 0;
    std::string scaling_note;
    std::vector<MethodReport> methods;
    nlohmann::json extra = nlohmann::json::object();

    const MethodReport& find(const std::string& label) const;
};

void to_json(nlohmann::json& j, const MethodReport& r);
void to_json(nlohmann::json& j, const SimReport& r);
/// Tidy rows: study,method,peek_n,value (cumulative rejection).
std::string to_csv(const std::vector<SimReport>& reports);

/// Counter-mode seed for replication `index`.
std::uint64_t replication_seed(std::uint64_t master_seed, std::uint64_t index);

/// Outcome of one method on one replication.
struct MethodOutcome {
    std::uint64_t stop_n = 0;  // 0 when the rule never fired
    bool has_interval = false;
    double lower = 0.0;         // interval at stop, or at the last evaluation
    double upper = 0.0;
    double estimate = 0.0;
    double statistic = 0.0;
    bool chose_treatment = false;
};

/// Runs every configured method on the same simulated streams.  Output is
/// indexed [replication][method] and does not depend on the thread count.
std::vector<std::vector<MethodOutcome>> simulate_outcomes(const SimStudyConfig& cfg);

/// Applies the configured methods to an externally supplied sequence of
/// snapshots (used to check that log analysis and simulation agree).
std::vector<MethodOutcome> evaluate_snapshots(const SimStudyConfig& cfg,
                                              const std::vector<TwoArmState>& snapshots);

/// Aggregates outcomes into per-method reports.
SimReport summarize(const SimStudyConfig& cfg, const std::vector<std::vector<MethodOutcome>>& outcomes,
                    const std::string& label_suffix = "");

SimReport run_type1_study(const SimStudyConfig& cfg);
SimReport run_power_study(const SimStudyConfig& cfg, const std::vector<double>& horizon_multiples);
/// Paired AsympCS vs lift-CS power over a grid of true lifts plus an
/// A/A companion run for the lift CS.
SimReport run_lift_power_study(const SimStudyConfig& cfg, const std::vector<double>& lifts,
                               const std::vector<double>& horizon_multiples);
/// For each rho2: A/A type-I over the configured horizon and power at
/// twice the FHT sample size with effect fht.mde.
std::vector<SimReport> run_rho2_sweep(const SimStudyConfig& cfg, const std::vector<double>& rho2_grid);
/// For each true effect: AsympCS 80th-percentile stopping time over the
/// FHT total sized with MDE = factor * effect.
SimReport run_mde_misspec_study(const std::vector<double>& effects, double factor,
                                const SimStudyConfig& cfg);

/// For each MDE: AsympCS run to the hypothesized sample size n* computed
/// for p0 and p0 + mde; reports the rejection frequency by n* and the
/// empirical 80th-percentile stopping time.
SimReport run_design_validation(const SimStudyConfig& cfg, const std::vector<double>& mde_grid);

// ---- single-arm stopping-quality studies ----

enum class SingleArmMethod { AsympCS, MSPRT, BHT };

struct SingleArmRule {
    SingleArmMethod method = SingleArmMethod::AsympCS;
    ConfSeqParams cs{};
    bayes::BetaPosterior prior{1.0, 1.0};  // BHT prior
    double epsilon = 1e-4;                 // BHT threshold
    double credible_level = 0.95;          // BHT interval used for miscoverage
    std::string label;
};

struct StopQualityConfig {
    double truth_a = 100.0;  // true rate ~ Beta(truth_a, truth_b)
    double truth_b = 100.0;
    double theta0 = 0.5;
    std::uint64_t replications = 10000;
    std::uint64_t first_peek = 100;
    std::uint64_t last_peek = 10'000'000;
    std::size_t peeks = 1000;  // log-spaced
    std::uint64_t master_seed = 1;
    unsigned threads = 0;
    std::vector<SingleArmRule> rules;

    void validate() const;
    std::vector<std::uint64_t> peek_schedule() const;
};

void from_json(const nlohmann::json& j, StopQualityConfig& cfg);

SimReport run_stop_quality_study(const StopQualityConfig& cfg);

}  // namespace seqab::sim
