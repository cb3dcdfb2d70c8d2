#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "seqab/engine.hpp"
#include "seqab/errors.hpp"

namespace seqab::engine {

using nlohmann::json;

std::uint64_t CrossTab::total() const noexcept {
    return counts[0][0] + counts[0][1] + counts[1][0] + counts[1][1];
}

std::string format_percent(std::uint64_t count, std::uint64_t total) {
    if (total == 0) throw DomainError("percentage of an empty table");
    const double pct = 100.0 * static_cast<double>(count) / static_cast<double>(total);
    char buf[32];
    if (pct >= 1.0) {
        std::snprintf(buf, sizeof buf, "%lld%%", std::llround(pct));
    } else {
        std::snprintf(buf, sizeof buf, "%.1f%%", static_cast<double>(std::llround(pct * 10.0)) / 10.0);
    }
    return buf;
}

CrossTab crosstab_from_counts(std::uint64_t both, std::uint64_t fht_only, std::uint64_t asympcs_only,
                              std::uint64_t neither) {
    CrossTab t;
    t.counts[0][0] = both;
    t.counts[0][1] = fht_only;
    t.counts[1][0] = asympcs_only;
    t.counts[1][1] = neither;
    return t;
}

CrossTab crosstab(std::span<const DecisionRecord> records) {
    struct Pair {
        const DecisionRecord* fht = nullptr;
        const DecisionRecord* cs = nullptr;
    };
    std::map<std::string, Pair> by_experiment;
    for (const auto& r : records) {
        Pair& p = by_experiment[r.experiment];
        const DecisionRecord** slot = nullptr;
        if (r.method == "FHT" || r.method == "FHT-peeking") slot = &p.fht;
        else if (r.method == "AsympCS") slot = &p.cs;
        else continue;
        if (*slot) throw ConfigError("experiment '" + r.experiment + "' has two " + r.method + " records");
        *slot = &r;
    }
    CrossTab t;
    for (const auto& [id, p] : by_experiment) {
        if (!p.fht || !p.cs) throw ConfigError("experiment '" + id + "' is missing its paired record");
        const int row = p.fht->verdict == Verdict::Significant ? 0 : 1;
        const int col = p.cs->verdict == Verdict::Significant ? 0 : 1;
        ++t.counts[row][col];
    }
    return t;
}

std::string format_crosstab(const CrossTab& tab) {
    const std::uint64_t total = tab.total();
    auto cell = [&](int r, int c) {
        return format_percent(tab.counts[r][c], total) + " (" + std::to_string(tab.counts[r][c]) + ")";
    };
    const std::string rows[4][4] = {
        {"", "AsympCS Significant", "AsympCS Not Significant", "Total"},
        {"FHT Significant", cell(0, 0), cell(0, 1), std::to_string(tab.row_total(0))},
        {"FHT Not Significant", cell(1, 0), cell(1, 1), std::to_string(tab.row_total(1))},
        {"Total", std::to_string(tab.col_total(0)), std::to_string(tab.col_total(1)), std::to_string(total)},
    };
    std::size_t width[4] = {0, 0, 0, 0};
    for (const auto& row : rows) {
        for (int c = 0; c < 4; ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (int c = 0; c < 4; ++c) {
            line += row[c];
            if (c < 3) line += std::string(width[c] - row[c].size() + 2, ' ');
        }
        out += line + "\n";
    }
    return out;
}

json crosstab_json(const CrossTab& tab) {
    const std::uint64_t total = tab.total();
    auto cell = [&](int r, int c) {
        return json{{"count", tab.counts[r][c]}, {"percent", format_percent(tab.counts[r][c], total)}};
    };
    return json{{"fht_significant", {{"asympcs_significant", cell(0, 0)}, {"asympcs_not_significant", cell(0, 1)}, {"total", tab.row_total(0)}}},
                {"fht_not_significant", {{"asympcs_significant", cell(1, 0)}, {"asympcs_not_significant", cell(1, 1)}, {"total", tab.row_total(1)}}},
                {"total", {{"asympcs_significant", tab.col_total(0)}, {"asympcs_not_significant", tab.col_total(1)}, {"total", total}}}};
}

std::vector<DecisionRecord> load_decisions(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    std::vector<DecisionRecord> out;
    for (const auto& path : files) {
        std::ifstream in(path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError("cannot parse " + path.string() + ": " + e.what());
        }
        out.push_back(j.get<DecisionRecord>());
    }
    return out;
}

}  // namespace seqab::engine
