// seqab: command-line front end for the sequential A/B testing engine.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "seqab/design.hpp"
#include "seqab/engine.hpp"
#include "seqab/errors.hpp"
#include "seqab/numerics.hpp"
#include "seqab/simlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void write_file(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    f << content;
    if (!f) throw std::runtime_error("cannot write " + path.string());
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw seqab::ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
}

struct AnalyzeArgs {
    std::string log, method, out, format = "auto", experiment;
    double alpha = 0.05, rho2 = 1e-3, theta0 = 0.0;
    std::uint64_t snapshot_every = 100, horizon = 0;
    std::size_t ldm_peeks = 100;
    bool dedup = false;
    double bht_epsilon = 1e-4, prior_a = 1.0, prior_b = 1.0, bf_odds = 20.0;
};

int run_analyze(const AnalyzeArgs& a) {
    seqab::engine::AnalyzeOptions opt;
    opt.method = seqab::rules::parse_method(a.method);
    opt.cs = {a.alpha, a.rho2};
    opt.cs.validate();
    opt.theta0 = a.theta0;
    opt.snapshot_every = a.snapshot_every;
    opt.dedup_units = a.dedup;
    if (a.horizon > 0) opt.horizon = a.horizon;
    opt.ldm_peeks = a.ldm_peeks;
    opt.bht = {a.prior_a, a.prior_b, a.bht_epsilon};
    opt.bf = {a.prior_a, a.prior_b, a.bf_odds};
    opt.experiment = a.experiment.empty() ? fs::path(a.log).stem().string() : a.experiment;

    seqab::engine::LogFormat format = seqab::engine::LogFormat::Auto;
    if (a.format == "jsonl") format = seqab::engine::LogFormat::JsonLines;
    else if (a.format == "csv") format = seqab::engine::LogFormat::Csv;

    const auto records = seqab::engine::read_log(a.log, format);
    const auto analysis = seqab::engine::analyze_records(records, opt);
    seqab::engine::write_analysis(analysis, a.out);
    std::cout << json(analysis.decision).dump() << "\n";
    return 0;
}

struct DesignArgs {
    double p0 = 0.1, mde = 0.01, alpha = 0.05, power = 0.8, rho2 = 1e-3;
    bool fixed_horizon = false, one_sided = false;
    std::uint64_t cap = 1'000'000'000;
};

int run_design(const DesignArgs& a) {
    seqab::design::DesignSpec spec;
    spec.theta_h0 = 0.0;
    spec.theta_h1 = a.mde;
    spec.sigma2_guess = seqab::design::variance_guess_binary(a.p0, a.mde);
    spec.alpha = a.alpha;
    spec.power = a.power;
    spec.population_cap = a.cap;
    const seqab::ConfSeqParams params{a.alpha, a.rho2};
    params.validate();
    const auto quantile = a.one_sided ? seqab::design::PowerQuantile::OneSided : seqab::design::PowerQuantile::AsPrinted;
    const auto n_star = seqab::design::hypothesized_sample_size(spec, params, quantile);
    const std::uint64_t fht_arm = seqab::design::fixed_horizon_sample_size(a.p0, a.mde, a.alpha, a.power);

    json out{{"p0", a.p0},
             {"mde", a.mde},
             {"alpha", a.alpha},
             {"power", a.power},
             {"rho2", a.rho2},
             {"variance_guess", spec.sigma2_guess},
             {"n_star", n_star ? json(*n_star) : json(nullptr)},
             {"fht_n", 2 * fht_arm}};
    if (!n_star) out["note"] = "design condition not met below the population cap";
    if (a.fixed_horizon) {
        out["fht_n_per_arm"] = fht_arm;
        out["fht_z_alpha"] = seqab::normal_quantile(1.0 - 0.5 * a.alpha);
        out["fht_z_power"] = seqab::normal_quantile(a.power);
        if (n_star) out["n_star_over_fht_n"] = static_cast<double>(*n_star) / static_cast<double>(2 * fht_arm);
    }
    std::cout << out.dump(2) << "\n";
    return 0;
}

struct SimulateArgs {
    std::string study, config, out;
    std::uint64_t seed = 0;
    bool seed_given = false;
    unsigned threads = 0;
    bool threads_given = false;
};

int run_simulate(const SimulateArgs& a) {
    const json cfg_json = read_json(a.config);
    std::vector<seqab::sim::SimReport> reports;
    if (a.study == "stop-quality") {
        seqab::sim::StopQualityConfig cfg;
        from_json(cfg_json, cfg);
        if (a.seed_given) cfg.master_seed = a.seed;
        if (a.threads_given) cfg.threads = a.threads;
        reports.push_back(seqab::sim::run_stop_quality_study(cfg));
    } else {
        seqab::sim::SimStudyConfig cfg;
        from_json(cfg_json, cfg);
        if (a.seed_given) cfg.master_seed = a.seed;
        if (a.threads_given) cfg.threads = a.threads;
        cfg.study = a.study;
        if (a.study == "type1") {
            reports.push_back(seqab::sim::run_type1_study(cfg));
        } else if (a.study == "power") {
            reports.push_back(seqab::sim::run_power_study(cfg, cfg.horizon_multiples));
        } else if (a.study == "lift-power") {
            reports.push_back(seqab::sim::run_lift_power_study(cfg, cfg.lifts, cfg.horizon_multiples));
        } else if (a.study == "rho2-sweep") {
            reports = seqab::sim::run_rho2_sweep(cfg, cfg.rho2_grid);
        } else if (a.study == "design-check") {
            reports.push_back(seqab::sim::run_design_validation(cfg, cfg.effects));
        } else if (a.study == "mde-misspec") {
            reports.push_back(seqab::sim::run_mde_misspec_study(cfg.effects, cfg.mde_misspecification_factor, cfg));
        }
    }
    const json doc = reports.size() == 1 ? json(reports.front()) : json(reports);
    write_file(fs::path(a.out) / "report.json", doc.dump(2) + "\n");
    write_file(fs::path(a.out) / "report.csv", seqab::sim::to_csv(reports));
    return 0;
}

struct CrosstabArgs {
    std::string decisions, out;
    std::vector<std::uint64_t> counts;
};

int run_crosstab(const CrosstabArgs& a) {
    seqab::engine::CrossTab tab;
    if (!a.counts.empty()) {
        if (a.counts.size() != 4) throw seqab::ConfigError("--counts takes four values");
        tab = seqab::engine::crosstab_from_counts(a.counts[0], a.counts[1], a.counts[2], a.counts[3]);
    } else {
        if (a.decisions.empty()) throw seqab::ConfigError("--decisions or --counts is required");
        const auto records = seqab::engine::load_decisions(a.decisions);
        tab = seqab::engine::crosstab(records);
    }
    const std::string text = seqab::engine::format_crosstab(tab);
    if (!a.out.empty()) {
        const bool as_json = fs::path(a.out).extension() == ".json";
        write_file(a.out, as_json ? seqab::engine::crosstab_json(tab).dump(2) + "\n" : text);
    }
    std::cout << text;
    return 0;
}

int run_corpus(const std::string& out) {
    json truth = json::array();
    for (const auto& spec : seqab::engine::default_corpus()) {
        std::ostringstream os;
        seqab::engine::write_jsonl(seqab::engine::corpus_log(spec), os);
        write_file(fs::path(out) / "logs" / (spec.id + ".jsonl"), os.str());
        truth.push_back({{"experiment", spec.id},
                         {"class", seqab::engine::corpus_class_name(spec.truth)},
                         {"p0", spec.p0},
                         {"p1", spec.p1},
                         {"n", spec.n}});
    }
    write_file(fs::path(out) / "truth.json", truth.dump(2) + "\n");
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Anytime-valid sequential A/B testing engine"};
    app.require_subcommand(1);

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "Replay an event log through a stopping rule");
    analyze->add_option("--log", aa.log, "Event log (JSON lines or CSV)")->required();
    analyze->add_option("--method", aa.method, "Stopping rule, e.g. asympcs, msprt, fht-peeking")->required();
    analyze->add_option("--alpha", aa.alpha, "Significance level");
    analyze->add_option("--rho2", aa.rho2, "Mixture tuning parameter");
    analyze->add_option("--theta0", aa.theta0, "Null effect");
    analyze->add_option("--snapshot-every", aa.snapshot_every, "Events between snapshots")->check(CLI::PositiveNumber);
    analyze->add_option("--horizon", aa.horizon, "Planned total sample size (FHT, LDM, running verdicts)");
    analyze->add_option("--ldm-peeks", aa.ldm_peeks, "Number of pre-registered LDM peeks");
    analyze->add_option("--experiment-id", aa.experiment, "Experiment id recorded in the decision");
    analyze->add_option("--format", aa.format, "auto, jsonl or csv")->check(CLI::IsMember({"auto", "jsonl", "csv"}));
    analyze->add_flag("--dedup", aa.dedup, "Keep only the first event per unit");
    analyze->add_option("--bht-epsilon", aa.bht_epsilon, "Threshold of caring for BHT");
    analyze->add_option("--prior-a", aa.prior_a, "Beta prior a for BHT-matched / BF");
    analyze->add_option("--prior-b", aa.prior_b, "Beta prior b for BHT-matched / BF");
    analyze->add_option("--bf-odds", aa.bf_odds, "Bayes factor stopping odds");
    analyze->add_option("--out", aa.out, "Output directory")->required();

    DesignArgs da;
    auto* design = app.add_subcommand("design", "Sample-size calculator");
    design->add_option("--p0", da.p0, "Baseline conversion rate")->required();
    design->add_option("--mde", da.mde, "Absolute minimum detectable effect")->required();
    design->add_option("--alpha", da.alpha, "Significance level");
    design->add_option("--power", da.power, "Target power");
    design->add_option("--rho2", da.rho2, "Mixture tuning parameter");
    design->add_option("--cap", da.cap, "Largest admissible total sample size");
    design->add_flag("--fixed-horizon", da.fixed_horizon, "Add fixed-horizon design details");
    design->add_flag("--one-sided-power", da.one_sided, "Use the one-sided type-II quantile");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo study");
    simulate->add_option("--study", sa.study, "Study type")
        ->required()
        ->check(CLI::IsMember({"type1", "power", "lift-power", "rho2-sweep", "mde-misspec", "stop-quality", "design-check"}));
    simulate->add_option("--config", sa.config, "Study config (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = simulate->add_option("--seed", sa.seed, "Master seed (overrides the config)");
    auto* threads_opt = simulate->add_option("--threads", sa.threads, "Worker threads (0 = all cores)");
    simulate->add_option("--out", sa.out, "Output directory")->required();

    auto* report = app.add_subcommand("report", "Summaries over decision records");
    report->require_subcommand(1);
    CrosstabArgs ca;
    auto* crosstab = report->add_subcommand("crosstab", "FHT vs AsympCS decision cross-tab");
    crosstab->add_option("--decisions", ca.decisions, "Directory of decision.json files");
    crosstab->add_option("--counts", ca.counts, "Cell counts: both, fht-only, asympcs-only, neither")->delimiter(',');
    crosstab->add_option("--out", ca.out, "Output path (.json for JSON, otherwise text)");

    std::string corpus_out;
    auto* corpus = app.add_subcommand("corpus", "Write the synthetic decision corpus");
    corpus->add_option("--out", corpus_out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        std::cout << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help("", CLI::AppFormatMode::All);
        return 2;
    }

    sa.seed_given = seed_opt->count() > 0;
    sa.threads_given = threads_opt->count() > 0;

    try {
        if (*analyze) return run_analyze(aa);
        if (*design) return run_design(da);
        if (*simulate) return run_simulate(sa);
        if (*crosstab) return run_crosstab(ca);
        if (*corpus) return run_corpus(corpus_out);
    } catch (const seqab::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::domain_error& e) {
        std::cerr << "domain error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
