#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include "seqab/engine.hpp"
#include "seqab/errors.hpp"

namespace seqab::engine {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

int checked_arm(long long arm, std::size_t line_no) {
    if (arm != 0 && arm != 1) {
        throw ParseError(line_no, "unknown arm " + std::to_string(arm) + " (expected 0 or 1)");
    }
    return static_cast<int>(arm);
}

double checked_value(double v, std::size_t line_no) {
    if (!std::isfinite(v)) throw ParseError(line_no, "value must be finite");
    return v;
}

std::vector<std::string> split_csv(std::string_view line, std::size_t line_no) {
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::string(trim(field)));
            field.clear();
        } else {
            field += c;
        }
    }
    if (quoted) throw ParseError(line_no, "unterminated quote");
    out.push_back(std::string(trim(field)));
    return out;
}

template <class T>
T parse_number(const std::string& s, std::size_t line_no, const char* what) {
    T v{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ParseError(line_no, std::string("bad ") + what + " '" + s + "'");
    }
    return v;
}

struct CsvColumns {
    int ts = -1, unit = -1, arm = -1, value = -1;
    std::size_t width = 0;
};

CsvColumns parse_header(std::string_view line, std::size_t line_no) {
    CsvColumns cols;
    const auto names = split_csv(line, line_no);
    cols.width = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        const int idx = static_cast<int>(i);
        if (names[i] == "ts") cols.ts = idx;
        else if (names[i] == "unit") cols.unit = idx;
        else if (names[i] == "arm") cols.arm = idx;
        else if (names[i] == "value") cols.value = idx;
    }
    if (cols.arm < 0 || cols.value < 0) throw ParseError(line_no, "CSV header needs arm and value columns");
    return cols;
}

EventRecord parse_csv_line(std::string_view line, std::size_t line_no, const CsvColumns& cols) {
    const auto f = split_csv(line, line_no);
    if (f.size() != cols.width) {
        throw ParseError(line_no, "expected " + std::to_string(cols.width) + " fields, got " + std::to_string(f.size()));
    }
    EventRecord r;
    if (cols.ts >= 0) r.ts = parse_number<std::int64_t>(f[cols.ts], line_no, "ts");
    if (cols.unit >= 0) r.unit = f[cols.unit];
    r.arm = checked_arm(parse_number<long long>(f[cols.arm], line_no, "arm"), line_no);
    r.value = checked_value(parse_number<double>(f[cols.value], line_no, "value"), line_no);
    return r;
}

bool looks_like_csv_header(std::string_view line) {
    return line.front() != '{' && line.find("arm") != std::string_view::npos;
}

}  // namespace

void ArmAccumulator::push(double y) noexcept {
    ++n_;
    fallback_.push(y);
    if (!integral_) return;
    if (y != std::trunc(y) || std::fabs(y) > 2147483648.0) {
        integral_ = binary_ = false;
        return;
    }
    const auto v = static_cast<long long>(y);
    if (v != 0 && v != 1) binary_ = false;
    sum_ += v;
    sum_sq_ += static_cast<wide>(v) * v;
}

void ArmAccumulator::merge(const ArmAccumulator& other) noexcept {
    n_ += other.n_;
    sum_ += other.sum_;
    sum_sq_ += other.sum_sq_;
    binary_ = binary_ && other.binary_;
    integral_ = integral_ && other.integral_;
    fallback_.merge(other.fallback_);
}

StreamingMoments ArmAccumulator::moments() const {
    if (n_ == 0) return {};
    if (binary_) return StreamingMoments::from_binary(n_, static_cast<std::uint64_t>(sum_));
    if (!integral_) return fallback_;
    const wide n = static_cast<wide>(n_);
    const wide scaled = n * sum_sq_ - sum_ * sum_;  // n * sum (y - mean)^2
    const long double m2 = static_cast<long double>(scaled) / static_cast<long double>(n_);
    const double mean = static_cast<double>(static_cast<long double>(sum_) / static_cast<long double>(n_));
    return StreamingMoments::from_parts(n_, mean, static_cast<double>(m2));
}

EventRecord parse_json_line(std::string_view line, std::size_t line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParseError(line_no, "expected a JSON object");
    EventRecord r;
    try {
        if (j.contains("ts")) r.ts = j.at("ts").get<std::int64_t>();
        if (j.contains("unit")) {
            const json& u = j.at("unit");
            r.unit = u.is_string() ? u.get<std::string>() : u.dump();
        }
        if (!j.contains("arm")) throw ParseError(line_no, "missing field 'arm'");
        if (!j.contains("value")) throw ParseError(line_no, "missing field 'value'");
        const json& arm = j.at("arm");
        if (!arm.is_number_integer()) throw ParseError(line_no, "arm must be an integer");
        r.arm = checked_arm(arm.get<long long>(), line_no);
        const json& value = j.at("value");
        if (value.is_boolean()) {
            r.value = value.get<bool>() ? 1.0 : 0.0;
        } else if (value.is_number()) {
            r.value = checked_value(value.get<double>(), line_no);
        } else {
            throw ParseError(line_no, "value must be a number");
        }
    } catch (const json::exception& e) {
        throw ParseError(line_no, e.what());
    }
    return r;
}

std::vector<EventRecord> parse_log(std::istream& in, LogFormat format) {
    std::vector<EventRecord> out;
    std::string raw;
    std::size_t line_no = 0;
    std::optional<CsvColumns> csv;
    bool decided = format != LogFormat::Auto;
    bool is_csv = format == LogFormat::Csv;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) continue;
        if (!decided) {
            is_csv = looks_like_csv_header(line);
            decided = true;
        }
        if (is_csv) {
            if (!csv) {
                csv = parse_header(line, line_no);
                continue;
            }
            out.push_back(parse_csv_line(line, line_no, *csv));
        } else {
            out.push_back(parse_json_line(line, line_no));
        }
    }
    return out;
}

std::vector<EventRecord> read_log(const std::filesystem::path& path, LogFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open log '" + path.string() + "'");
    return parse_log(in, format);
}

IngestResult ingest(std::span<const EventRecord> records, const IngestOptions& options) {
    if (options.snapshot_every < 1) throw ConfigError("snapshot cadence must be at least 1");
    IngestResult res;
    std::unordered_set<std::string> seen;
    ArmAccumulator arms[2];
    auto snapshot = [&] { return TwoArmState{arms[0].moments(), arms[1].moments()}; };
    for (const auto& r : records) {
        if (options.dedup_units && !seen.insert(r.unit).second) {
            ++res.duplicates;
            continue;
        }
        arms[r.arm == 0 ? 0 : 1].push(r.value);
        ++res.accepted;
        if (res.accepted % options.snapshot_every == 0) res.snapshots.push_back(snapshot());
    }
    if (res.accepted % options.snapshot_every != 0) res.snapshots.push_back(snapshot());
    res.state = snapshot();
    return res;
}

TwoArmState ingest_sharded(std::span<const EventRecord> records, std::size_t shards) {
    if (shards < 1) throw ConfigError("need at least one shard");
    ArmAccumulator total[2];
    const std::size_t size = records.size();
    for (std::size_t s = 0; s < shards; ++s) {
        const std::size_t lo = size * s / shards;
        const std::size_t hi = size * (s + 1) / shards;
        ArmAccumulator part[2];
        for (std::size_t i = lo; i < hi; ++i) part[records[i].arm == 0 ? 0 : 1].push(records[i].value);
        total[0].merge(part[0]);
        total[1].merge(part[1]);
    }
    return {total[0].moments(), total[1].moments()};
}

void write_jsonl(std::span<const EventRecord> records, std::ostream& out) {
    for (const auto& r : records) {
        out << json{{"ts", r.ts}, {"unit", r.unit}, {"arm", r.arm}, {"value", r.value}}.dump() << '\n';
    }
}

}  // namespace seqab::engine
