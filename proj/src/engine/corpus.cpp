#include <cmath>
#include <cstdio>

#include "seqab/engine.hpp"
#include "seqab/errors.hpp"

namespace seqab::engine {

std::string_view corpus_class_name(CorpusClass c) noexcept {
    switch (c) {
        case CorpusClass::Both: return "both-significant";
        case CorpusClass::FhtOnly: return "fht-only";
        case CorpusClass::AsympCSOnly: return "asympcs-only";
        case CorpusClass::Neither: return "neither";
    }
    return "neither";
}

std::vector<CorpusSpec> default_corpus() {
    std::vector<CorpusSpec> out;
    auto add = [&](CorpusClass c, double p0, double p1, std::uint64_t n) {
        char id[32];
        std::snprintf(id, sizeof id, "exp-%03zu", out.size() + 1);
        out.push_back({id, c, p0, p1, n});
    };
    for (std::uint64_t k = 0; k < 28; ++k) add(CorpusClass::Both, 0.1, 0.2, 4000 + 20 * k);
    for (std::uint64_t k = 0; k < 15; ++k) add(CorpusClass::FhtOnly, 0.1, 0.115, 10000 + 50 * k);
    for (std::uint64_t k = 0; k < 57; ++k) add(CorpusClass::Neither, 0.1, 0.1, 2000 + 100 * k);
    return out;
}

std::vector<EventRecord> corpus_log(const CorpusSpec& spec) {
    if (!(spec.p0 >= 0.0 && spec.p0 <= 1.0 && spec.p1 >= 0.0 && spec.p1 <= 1.0)) {
        throw DomainError("corpus rates must be probabilities");
    }
    std::vector<EventRecord> out;
    out.reserve(spec.n);
    for (std::uint64_t i = 0; i < spec.n; ++i) {
        const int arm = static_cast<int>(i % 2);
        const double p = arm == 0 ? spec.p0 : spec.p1;
        const double k = static_cast<double>(i / 2);
        // one success whenever the running quota k * p passes an integer
        const double value = std::floor((k + 1.0) * p) - std::floor(k * p);
        out.push_back({static_cast<std::int64_t>(i) * 1000, spec.id + "-u" + std::to_string(i), arm, value});
    }
    return out;
}

}  // namespace seqab::engine
