#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "seqab/engine.hpp"
#include "seqab/errors.hpp"
#include "seqab/simlab.hpp"

namespace engine = seqab::engine;
using engine::EventRecord;
using engine::Verdict;

namespace {

std::vector<EventRecord> parse(const std::string& text) {
    std::istringstream in(text);
    return engine::parse_log(in);
}

std::size_t parse_error_line(const std::string& text) {
    try {
        parse(text);
    } catch (const seqab::ParseError& e) {
        return e.line();
    }
    return 0;
}

std::vector<EventRecord> random_log(std::size_t n, double p0, double p1, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution coin(0.5);
    std::vector<EventRecord> out;
    for (std::size_t i = 0; i < n; ++i) {
        const int arm = coin(rng) ? 1 : 0;
        std::bernoulli_distribution conv(arm ? p1 : p0);
        out.push_back({static_cast<std::int64_t>(i), "u" + std::to_string(i), arm, conv(rng) ? 1.0 : 0.0});
    }
    return out;
}

}  // namespace

TEST(ParseLog, JsonLines) {
    const auto recs = parse(
        "{\"ts\": 1, \"unit\": \"a\", \"arm\": 0, \"value\": 1}\n"
        "\n"
        "{\"ts\": 2, \"unit\": \"b\", \"arm\": 1, \"value\": 0.5}\n"
        "{\"ts\": 3, \"unit\": \"c\", \"arm\": 1, \"value\": true}\n");
    ASSERT_EQ(recs.size(), 3u);
    EXPECT_EQ(recs[0], (EventRecord{1, "a", 0, 1.0}));
    EXPECT_EQ(recs[1].value, 0.5);
    EXPECT_EQ(recs[2].value, 1.0);
}

TEST(ParseLog, ErrorsCarryLineNumbers) {
    EXPECT_EQ(parse_error_line("{\"arm\": 0, \"value\": 1}\n{\"arm\": 2, \"value\": 1}\n"), 2u);
    EXPECT_EQ(parse_error_line("{\"arm\": 0, \"value\": 1}\n{\"arm\": 1}\n"), 2u);
    EXPECT_EQ(parse_error_line("{\"arm\": 0, \"value\": 1}\n\n{oops\n"), 3u);
    EXPECT_EQ(parse_error_line("{\"arm\": 0, \"value\": \"x\"}\n"), 1u);
    EXPECT_EQ(parse_error_line("ts,unit,arm,value\n1,a,0,1\n2,b,3,0\n"), 3u);
    EXPECT_EQ(parse_error_line("ts,unit,arm,value\n1,a,0\n"), 2u);
}

TEST(ParseLog, CsvWithHeader) {
    const auto recs = parse("ts,unit,arm,value\n5,\"x,y\",1,0\n6,z,0,2.5\n");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0], (EventRecord{5, "x,y", 1, 0.0}));
    EXPECT_EQ(recs[1].value, 2.5);
}

TEST(Ingest, FourLineFixtureByHand) {
    const auto recs = parse(
        "{\"unit\": \"a\", \"arm\": 0, \"value\": 1}\n"
        "{\"unit\": \"b\", \"arm\": 1, \"value\": 3}\n"
        "{\"unit\": \"c\", \"arm\": 0, \"value\": 5}\n"
        "{\"unit\": \"d\", \"arm\": 1, \"value\": 7}\n");
    const auto r = engine::ingest(recs, {2, false});
    EXPECT_EQ(r.accepted, 4u);
    ASSERT_EQ(r.snapshots.size(), 2u);
    EXPECT_EQ(r.state.arm0.count(), 2u);
    EXPECT_DOUBLE_EQ(r.state.arm0.mean(), 3.0);
    EXPECT_DOUBLE_EQ(r.state.arm0.m2(), 8.0);
    EXPECT_DOUBLE_EQ(r.state.arm1.mean(), 5.0);
    EXPECT_DOUBLE_EQ(r.state.arm1.m2(), 8.0);
    EXPECT_EQ(r.snapshots[0].n(), 2u);
}

TEST(Ingest, DedupKeepsFirstEventPerUnit) {
    const std::vector<EventRecord> recs{{1, "a", 0, 1}, {2, "a", 0, 0}, {3, "b", 1, 1}, {4, "b", 1, 1}};
    const auto r = engine::ingest(recs, {100, true});
    EXPECT_EQ(r.accepted, 2u);
    EXPECT_EQ(r.duplicates, 2u);
    EXPECT_EQ(r.state.arm0.mean(), 1.0);
    ASSERT_EQ(r.snapshots.size(), 1u);  // trailing partial snapshot
}

TEST(Ingest, ShardCountDoesNotChangeState) {
    const auto recs = random_log(100000, 0.1, 0.12, 42);
    const auto ref = engine::ingest(recs).state;
    for (std::size_t shards : {1u, 2u, 3u, 7u, 16u, 64u}) {
        const auto s = engine::ingest_sharded(recs, shards);
        EXPECT_EQ(s.arm0, ref.arm0) << shards;
        EXPECT_EQ(s.arm1, ref.arm1) << shards;
    }
    // integer-valued but non-binary data also merges exactly
    std::vector<EventRecord> counts = recs;
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i].value = static_cast<double>(i % 17);
    const auto cref = engine::ingest(counts).state;
    for (std::size_t shards : {2u, 5u, 31u}) {
        const auto s = engine::ingest_sharded(counts, shards);
        EXPECT_EQ(s.arm0, cref.arm0);
        EXPECT_EQ(s.arm1, cref.arm1);
    }
}

TEST(Ingest, BinaryStateMatchesSimulatorState) {
    const auto recs = random_log(5000, 0.1, 0.3, 9);
    const auto st = engine::ingest(recs).state;
    std::uint64_t c0 = 0, c1 = 0;
    for (const auto& r : recs) (r.arm ? c1 : c0) += r.value > 0 ? 1 : 0;
    EXPECT_EQ(st.arm0, seqab::StreamingMoments::from_binary(st.arm0.count(), c0));
    EXPECT_EQ(st.arm1, seqab::StreamingMoments::from_binary(st.arm1.count(), c1));
}

TEST(Analyze, ConstantZeroLogIsNotSignificant) {
    std::vector<EventRecord> recs;
    for (int i = 0; i < 1000; ++i) recs.push_back({i, "u" + std::to_string(i), i % 2, 0.0});
    engine::AnalyzeOptions opt;
    const auto a = engine::analyze_records(recs, opt);
    EXPECT_EQ(a.decision.verdict, Verdict::NotSignificant);
    ASSERT_TRUE(a.decision.lower && a.decision.upper);
    EXPECT_EQ(*a.decision.lower, 0.0);
    EXPECT_EQ(*a.decision.upper, 0.0);
}

TEST(Analyze, HorizonLeavesExperimentRunning) {
    const auto recs = random_log(2000, 0.1, 0.1, 4);
    engine::AnalyzeOptions opt;
    opt.horizon = 10000;
    EXPECT_EQ(engine::analyze_records(recs, opt).decision.verdict, Verdict::Running);
    opt.method = seqab::rules::Method::FHT;
    opt.horizon.reset();
    EXPECT_THROW(engine::analyze_records(recs, opt), seqab::ConfigError);
}

TEST(Analyze, TrajectoryAndDecisionFiles) {
    const auto recs = random_log(3000, 0.1, 0.4, 5);
    engine::AnalyzeOptions opt;
    opt.experiment = "t";
    const auto a = engine::analyze_records(recs, opt);
    EXPECT_EQ(a.decision.verdict, Verdict::Significant);
    EXPECT_EQ(a.trajectory.back().verdict, Verdict::Significant);
    const auto dir = std::filesystem::temp_directory_path() / "seqab_engine_test";
    std::filesystem::remove_all(dir);
    engine::write_analysis(a, dir);
    std::ifstream csv(dir / "trajectory.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "n,n0,n1,center,lower,upper,verdict");
    const auto back = engine::load_decisions(dir);
    ASSERT_EQ(back.size(), 1u);
    EXPECT_EQ(back[0].verdict, Verdict::Significant);
    EXPECT_EQ(back[0].n, a.decision.n);
    std::filesystem::remove_all(dir);
}

TEST(Analyze, AgreesWithSimulatorOnSameSnapshots) {
    seqab::sim::SimStudyConfig cfg;
    cfg.methods = {seqab::rules::Method::AsympCS, seqab::rules::Method::MSPRT};
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto recs = random_log(20000, 0.1, seed % 2 ? 0.12 : 0.1, 100 + seed);
        const auto snaps = engine::ingest(recs, {200, false}).snapshots;
        const auto sim_out = seqab::sim::evaluate_snapshots(cfg, snaps);
        for (std::size_t m = 0; m < cfg.methods.size(); ++m) {
            engine::AnalyzeOptions opt;
            opt.method = cfg.methods[m];
            const auto d = engine::analyze(snaps, opt).decision;
            EXPECT_EQ(d.verdict == Verdict::Significant, sim_out[m].stop_n > 0) << seed;
            if (sim_out[m].stop_n > 0) EXPECT_EQ(d.n, sim_out[m].stop_n);
        }
    }
}

TEST(AaLogs, AsympCsRarelySignificant) {
    int not_sig = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto recs = random_log(20000, 0.1, 0.1, 5000 + seed);
        if (engine::analyze_records(recs, {}).decision.verdict == Verdict::NotSignificant) ++not_sig;
    }
    EXPECT_GE(not_sig, 95);
}

TEST(CrossTab, FormatsPublishedCounts) {
    const auto t = engine::crosstab_from_counts(593, 308, 3, 1185);
    EXPECT_EQ(engine::format_percent(593, 2089), "28%");
    EXPECT_EQ(engine::format_percent(308, 2089), "15%");
    EXPECT_EQ(engine::format_percent(3, 2089), "0.1%");
    EXPECT_EQ(engine::format_percent(1185, 2089), "57%");
    EXPECT_EQ(t.row_total(0), 901u);
    EXPECT_EQ(t.row_total(1), 1188u);
    EXPECT_EQ(t.col_total(0), 596u);
    EXPECT_EQ(t.col_total(1), 1493u);
    EXPECT_EQ(t.total(), 2089u);
    const std::string text = engine::format_crosstab(t);
    EXPECT_NE(text.find("28% (593)"), std::string::npos);
    EXPECT_NE(text.find("0.1% (3)"), std::string::npos);
    const auto j = engine::crosstab_json(t);
    EXPECT_EQ(j["fht_not_significant"]["asympcs_not_significant"]["percent"], "57%");
}

TEST(CrossTab, PairsRecordsPerExperiment) {
    std::vector<engine::DecisionRecord> recs(3);
    recs[0].experiment = "a", recs[0].method = "FHT-peeking", recs[0].verdict = Verdict::Significant;
    recs[1].experiment = "a", recs[1].method = "AsympCS", recs[1].verdict = Verdict::NotSignificant;
    recs[2].experiment = "b", recs[2].method = "AsympCS", recs[2].verdict = Verdict::Running;
    EXPECT_THROW(engine::crosstab(recs), seqab::ConfigError);
    recs.pop_back();
    const auto t = engine::crosstab(recs);
    EXPECT_EQ(t.counts[0][1], 1u);
}

TEST(Corpus, PipelineRecoversGroundTruth) {
    const auto corpus = engine::default_corpus();
    ASSERT_EQ(corpus.size(), 100u);
    std::vector<engine::DecisionRecord> decisions;
    for (const auto& spec : corpus) {
        const auto log = engine::corpus_log(spec);
        for (auto method : {seqab::rules::Method::FHTPeeking, seqab::rules::Method::AsympCS}) {
            engine::AnalyzeOptions opt;
            opt.method = method;
            opt.experiment = spec.id;
            const auto d = engine::analyze_records(log, opt).decision;
            const bool sig = d.verdict == Verdict::Significant;
            const bool want = method == seqab::rules::Method::AsympCS ? spec.truth == engine::CorpusClass::Both
                                                                       : spec.truth != engine::CorpusClass::Neither;
            EXPECT_EQ(sig, want) << spec.id << " " << seqab::rules::method_name(method);
            decisions.push_back(d);
        }
    }
    const auto t = engine::crosstab(decisions);
    EXPECT_EQ(t.counts[0][0], 28u);
    EXPECT_EQ(t.counts[0][1], 15u);
    EXPECT_EQ(t.counts[1][0], 0u);
    EXPECT_EQ(t.counts[1][1], 57u);
}

TEST(Corpus, JsonlRoundTrip) {
    const auto log = engine::corpus_log(engine::default_corpus()[0]);
    std::ostringstream out;
    engine::write_jsonl(log, out);
    std::istringstream in(out.str());
    EXPECT_EQ(engine::parse_log(in), log);
}
