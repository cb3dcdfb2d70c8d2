#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "seqab/confseq.hpp"
#include "seqab/rules.hpp"

namespace seqab::engine {

struct EventRecord {
    std::int64_t ts = 0;  // milliseconds
    std::string unit;
    int arm = 0;
    double value = 0.0;

    friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

enum class LogFormat { Auto, JsonLines, Csv };

/// Parses a whole log.  Auto picks CSV when the first non-blank line is a
/// header naming the record fields, JSON lines otherwise.  Blank lines are
/// skipped; malformed lines and arms outside {0, 1} raise ParseError with
/// the 1-based line number.
std::vector<EventRecord> parse_log(std::istream& in, LogFormat format = LogFormat::Auto);
std::vector<EventRecord> read_log(const std::filesystem::path& path, LogFormat format = LogFormat::Auto);

EventRecord parse_json_line(std::string_view line, std::size_t line_no);

/// Per-arm accumulator used by ingestion.  Integer-valued streams keep
/// exact sums, so any split into shards merges to the same bits; other
/// streams fall back to Welford / Chan updates.
class ArmAccumulator {
public:
    __extension__ typedef __int128 wide;

    void push(double y) noexcept;
    void merge(const ArmAccumulator& other) noexcept;
    StreamingMoments moments() const;
    std::uint64_t count() const noexcept { return n_; }

private:
    std::uint64_t n_ = 0;
    wide sum_ = 0;
    wide sum_sq_ = 0;
    bool binary_ = true;
    bool integral_ = true;
    StreamingMoments fallback_;
};

struct IngestOptions {
    std::uint64_t snapshot_every = 100;
    bool dedup_units = false;  // keep only the first event per unit id
};

struct IngestResult {
    TwoArmState state;
    std::vector<TwoArmState> snapshots;  // after every snapshot_every accepted events, plus a final partial one
    std::uint64_t accepted = 0;
    std::uint64_t duplicates = 0;
};

IngestResult ingest(std::span<const EventRecord> records, const IngestOptions& options = {});

/// Final state by splitting the records into `shards` contiguous pieces,
/// accumulating each independently and merging.
TwoArmState ingest_sharded(std::span<const EventRecord> records, std::size_t shards);

enum class Verdict { Significant, NotSignificant, Running };
std::string_view verdict_name(Verdict v) noexcept;
Verdict parse_verdict(std::string_view s);

struct TrajectoryRow {
    std::uint64_t n = 0, n0 = 0, n1 = 0;
    double center = 0.0;
    std::optional<double> lower, upper;
    Verdict verdict = Verdict::Running;
};

struct DecisionRecord {
    std::string experiment;
    std::string method;
    Verdict verdict = Verdict::Running;
    std::uint64_t n = 0;  // n at the decision, or at the last snapshot
    std::uint64_t n0 = 0, n1 = 0;
    std::uint64_t peeks = 0;  // snapshots evaluated up to the decision
    double center = 0.0;
    std::optional<double> lower, upper;
    std::optional<double> statistic;
};

void to_json(nlohmann::json& j, const DecisionRecord& d);
void from_json(const nlohmann::json& j, DecisionRecord& d);

struct AnalyzeOptions {
    rules::Method method = rules::Method::AsympCS;
    ConfSeqParams cs{};
    double theta0 = 0.0;
    std::uint64_t snapshot_every = 100;
    bool dedup_units = false;
    std::optional<std::uint64_t> horizon;  // planned total n; required by FHT and LDM
    std::size_t ldm_peeks = 100;
    bayes::BhtConfig bht{};
    bayes::BfConfig bf{};
    std::string experiment;
};

struct Analysis {
    std::vector<TrajectoryRow> trajectory;
    DecisionRecord decision;
};

/// Builds the rule shared with the simulation lab.
rules::RuleConfig make_rule(const AnalyzeOptions& options);

Analysis analyze(std::span<const TwoArmState> snapshots, const AnalyzeOptions& options);
Analysis analyze_records(std::span<const EventRecord> records, const AnalyzeOptions& options);

std::string trajectory_csv(const std::vector<TrajectoryRow>& rows);

/// Writes trajectory.csv and decision.json into `out_dir`.
void write_analysis(const Analysis& analysis, const std::filesystem::path& out_dir);

// ---- cross-tabulation ----

struct CrossTab {
    // [fht significant?][asympcs significant?] with index 0 = significant
    std::uint64_t counts[2][2] = {{0, 0}, {0, 0}};

    std::uint64_t total() const noexcept;
    std::uint64_t row_total(int r) const noexcept { return counts[r][0] + counts[r][1]; }
    std::uint64_t col_total(int c) const noexcept { return counts[0][c] + counts[1][c]; }
};

/// Percent with no decimals at or above 1%, one decimal below.
std::string format_percent(std::uint64_t count, std::uint64_t total);

/// Pairs one FHT-family record with one AsympCS record per experiment.
/// Throws ConfigError on missing partners or duplicates.  Running verdicts
/// count as not significant.
CrossTab crosstab(std::span<const DecisionRecord> records);
CrossTab crosstab_from_counts(std::uint64_t both, std::uint64_t fht_only, std::uint64_t asympcs_only,
                              std::uint64_t neither);
std::string format_crosstab(const CrossTab& tab);
nlohmann::json crosstab_json(const CrossTab& tab);

/// Loads every *.json decision record below `dir` (sorted by path).
std::vector<DecisionRecord> load_decisions(const std::filesystem::path& dir);

// ---- synthetic corpus with known ground truth ----

enum class CorpusClass { Both, FhtOnly, AsympCSOnly, Neither };
std::string_view corpus_class_name(CorpusClass c) noexcept;

struct CorpusSpec {
    std::string id;
    CorpusClass truth = CorpusClass::Neither;
    double p0 = 0.1;
    double p1 = 0.1;
    std::uint64_t n = 0;
};

/// Default 100-experiment corpus: 28 both significant, 15 FHT-peeking
/// only, 57 neither.
std::vector<CorpusSpec> default_corpus();

/// Deterministic log: arms alternate and each arm's outcomes follow an
/// evenly spread (Bresenham) pattern at its rate.
std::vector<EventRecord> corpus_log(const CorpusSpec& spec);

void write_jsonl(std::span<const EventRecord> records, std::ostream& out);

}  // namespace seqab::engine
