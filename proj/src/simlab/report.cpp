#include <algorithm>
#include <charconv>
#include <stdexcept>

#include "seqab/simlab.hpp"

namespace seqab::sim {

using nlohmann::json;

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

template <class T>
json opt(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace

double MethodReport::rejection_at(std::uint64_t n) const {
    const auto it = std::upper_bound(peek_n.begin(), peek_n.end(), n);
    if (it == peek_n.begin()) return 0.0;
    return cumulative_rejection[static_cast<std::size_t>(it - peek_n.begin()) - 1];
}

const MethodReport& SimReport::find(const std::string& label) const {
    for (const auto& m : methods) {
        if (m.label == label) return m;
    }
    throw std::out_of_range("no method report labelled '" + label + "'");
}

void to_json(json& j, const MethodReport& r) {
    json quantiles = json::object();
    for (const auto& [q, v] : r.stop_time_quantiles) quantiles[shortest(q)] = opt(v);
    json pairs = json::array();
    for (const auto& [truth, est] : r.calibration_pairs) pairs.push_back({truth, est});
    j = json{{"method", r.method},
             {"label", r.label},
             {"peek_n", r.peek_n},
             {"cumulative_rejection_by_peek", r.cumulative_rejection},
             {"power", r.power},
             {"stop_time_quantiles", quantiles},
             {"miscoverage_at_stop", opt(r.miscoverage_at_stop)},
             {"mean_loss_at_stop", opt(r.mean_loss_at_stop)},
             {"mean_posterior_loss_at_stop", opt(r.mean_posterior_loss_at_stop)},
             {"calibration_pairs", pairs}};
}

void to_json(json& j, const SimReport& r) {
    j = json{{"study", r.study},
             {"replications", r.replications},
             {"horizon", r.horizon},
             {"peek_every", r.peek_every},
             {"fht_total_n", r.fht_total},
             {"master_seed", r.master_seed},
             {"scaling", r.scaling_note},
             {"methods", r.methods},
             {"summary", r.extra}};
}

std::string to_csv(const std::vector<SimReport>& reports) {
    std::string out = "study,method,peek_n,value\n";
    for (const auto& r : reports) {
        for (const auto& m : r.methods) {
            const std::string prefix = csv_field(r.study) + "," + csv_field(m.label) + ",";
            for (std::size_t i = 0; i < m.peek_n.size(); ++i) {
                out += prefix + std::to_string(m.peek_n[i]) + "," + shortest(m.cumulative_rejection[i]) + "\n";
            }
        }
    }
    return out;
}

}  // namespace seqab::sim
