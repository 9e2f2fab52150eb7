#include "fshap/core.hpp"

#include <algorithm>
#include <bit>

namespace fshap {

Task parse_task(const std::string& name) {
    if (name == "codegen" || name == "code_generation") return Task::CodeGeneration;
    if (name == "codesum" || name == "code_summarization") return Task::CodeSummarization;
    throw ContractViolation("unknown task: " + name);
}

std::string task_name(Task task) {
    switch (task) {
        case Task::CodeGeneration: return "codegen";
        case Task::CodeSummarization: return "codesum";
    }
    throw ContractViolation("invalid task value");
}

std::string mode_name(ShapleyMode mode) {
    return mode == ShapleyMode::Exact ? "exact" : "mc";
}

ShapleyMode parse_mode(const std::string& name) {
    if (name == "exact") return ShapleyMode::Exact;
    if (name == "mc" || name == "monte-carlo" || name == "montecarlo") return ShapleyMode::MonteCarlo;
    throw ContractViolation("unknown mode: " + name);
}

std::string FeaturePartition::concat_text() const {
    std::string out;
    std::size_t total = 0;
    for (const auto& f : features) total += f.text.size();
    out.reserve(total);
    for (const auto& f : features) out += f.text;
    return out;
}

FeaturePartition FeaturePartition::from_texts(std::string source_id,
                                              const std::vector<std::string>& texts,
                                              std::string splitter_name) {
    FeaturePartition p;
    p.source_id = std::move(source_id);
    p.splitter_name = std::move(splitter_name);
    p.features.reserve(texts.size());
    std::size_t pos = 0;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (texts[i].empty())
            throw ContractViolation("empty feature text at index " + std::to_string(i));
        Feature f;
        f.index = i;
        f.text = texts[i];
        f.byte_start = pos;
        pos += texts[i].size();
        f.byte_end = pos;
        p.features.push_back(std::move(f));
    }
    return p;
}

bool FeaturePartition::well_formed() const {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const Feature& f = features[i];
        if (f.index != i) return false;
        if (f.byte_start != pos) return false;
        if (f.byte_end != f.byte_start + f.text.size()) return false;
        if (f.text.empty() && features.size() > 1) return false;
        pos = f.byte_end;
    }
    return true;
}

Coalition Coalition::of(std::initializer_list<unsigned> indices) {
    Coalition c;
    for (unsigned i : indices) {
        if (i >= kMaxFeatures) throw ContractViolation("feature index out of range");
        c.mask_ |= std::uint64_t{1} << i;
    }
    return c;
}

Coalition Coalition::of(const std::vector<unsigned>& indices) {
    Coalition c;
    for (unsigned i : indices) {
        if (i >= kMaxFeatures) throw ContractViolation("feature index out of range");
        c.mask_ |= std::uint64_t{1} << i;
    }
    return c;
}

Coalition Coalition::full(unsigned n) {
    if (n > kMaxFeatures) throw ContractViolation("too many features for coalition mask");
    if (n == 0) return Coalition();
    return Coalition((~std::uint64_t{0}) >> (64 - n));
}

unsigned Coalition::count() const {
    return static_cast<unsigned>(std::popcount(mask_));
}

std::vector<unsigned> Coalition::indices() const {
    std::vector<unsigned> out;
    out.reserve(count());
    std::uint64_t m = mask_;
    while (m) {
        unsigned i = static_cast<unsigned>(std::countr_zero(m));
        out.push_back(i);
        m &= m - 1;
    }
    return out;
}

std::string assemble(const FeaturePartition& partition, const Coalition& coalition) {
    const std::size_t n = partition.size();
    if (n > Coalition::kMaxFeatures)
        throw ContractViolation("partition too large for coalition mask");
    for (unsigned i : coalition.indices())
        if (i >= n) throw ContractViolation("coalition references feature " + std::to_string(i) +
                                            " outside partition of size " + std::to_string(n));
    std::string out;
    for (const Feature& f : partition.features)
        if (coalition.contains(static_cast<unsigned>(f.index))) out += f.text;
    return out;
}

}  // namespace fshap
