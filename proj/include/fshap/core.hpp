#ifndef FSHAP_CORE_HPP
#define FSHAP_CORE_HPP

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace fshap {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Precondition or API misuse (bad index, invalid argument combination).
class ContractViolation : public Error {
public:
    using Error::Error;
};

class SplitError : public Error {
public:
    enum class Kind { Parse, Empty, Grammar };
    SplitError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Exact enumeration requested for more features than the configured cap.
class ExactModeCap : public Error {
public:
    ExactModeCap(unsigned n, unsigned cap)
        : Error("exact mode supports at most " + std::to_string(cap) +
                " features, got " + std::to_string(n)),
          cap_(cap) {}
    unsigned cap() const { return cap_; }

private:
    unsigned cap_;
};

class IncompleteTable : public Error {
public:
    using Error::Error;
};

class PlanInvariantViolated : public Error {
public:
    using Error::Error;
};

class ProviderError : public Error {
public:
    ProviderError(const std::string& msg, int status = 0) : Error(msg), status_(status) {}
    int status() const { return status_; }

private:
    int status_;
};

class ComparatorError : public Error {
public:
    using Error::Error;
};

class InjectionError : public Error {
public:
    enum class Kind { NoCandidate };
    InjectionError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

class AttributorError : public Error {
public:
    using Error::Error;
};

class ReportError : public Error {
public:
    using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class Task { CodeGeneration, CodeSummarization };

/// Parses "codegen" / "codesum" and the long spellings; throws ContractViolation otherwise.
Task parse_task(const std::string& name);
std::string task_name(Task task);

/// One input to explain. `text` is UTF-8 and all offsets in this codebase are
/// byte offsets into it.
struct InputDocument {
    std::string id;
    Task task = Task::CodeGeneration;
    std::string text;
    std::optional<std::string> language_hint;
};

/// A contiguous byte span of an input, the unit of attribution.
struct Feature {
    std::size_t index = 0;
    std::string text;
    std::size_t byte_start = 0;
    std::size_t byte_end = 0;
};

/// Ordered, lossless segmentation: features tile [0, len(source)) and their
/// concatenation reproduces the source byte-exactly.
struct FeaturePartition {
    std::string source_id;
    std::vector<Feature> features;
    std::string splitter_name;

    std::size_t size() const { return features.size(); }

    /// Concatenation of all feature texts (the source the partition tiles).
    std::string concat_text() const;

    /// Builds a partition from ordered segment texts, computing byte offsets.
    /// Empty segments are rejected.
    static FeaturePartition from_texts(std::string source_id,
                                       const std::vector<std::string>& texts,
                                       std::string splitter_name);

    /// Internal consistency: contiguous spans from 0, texts match span widths,
    /// no empty feature unless the partition is a single whole-input feature.
    bool well_formed() const;
};

/// Set of kept feature indices, stored as a bitmask. Supports up to 62
/// features, far beyond the exact-mode cap; Monte Carlo plans stay well
/// under this in practice.
class Coalition {
public:
    static constexpr unsigned kMaxFeatures = 62;

    Coalition() = default;
    explicit Coalition(std::uint64_t mask) : mask_(mask) {}

    static Coalition of(std::initializer_list<unsigned> indices);
    static Coalition of(const std::vector<unsigned>& indices);
    static Coalition full(unsigned n);

    bool contains(unsigned index) const { return (mask_ >> index) & 1u; }
    Coalition with(unsigned index) const { return Coalition(mask_ | (std::uint64_t{1} << index)); }
    Coalition without(unsigned index) const { return Coalition(mask_ & ~(std::uint64_t{1} << index)); }

    unsigned count() const;
    bool empty() const { return mask_ == 0; }
    std::uint64_t mask() const { return mask_; }
    std::vector<unsigned> indices() const;

    auto operator<=>(const Coalition&) const = default;

private:
    std::uint64_t mask_ = 0;
};

struct CoalitionHash {
    std::size_t operator()(const Coalition& c) const {
        std::uint64_t x = c.mask() + 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return static_cast<std::size_t>(x ^ (x >> 31));
    }
};

struct ModelOutput {
    std::string text;
    std::string model_id;
    std::string prompt_hash;
    bool from_cache = false;
};

enum class ShapleyMode { Exact, MonteCarlo };

std::string mode_name(ShapleyMode mode);
ShapleyMode parse_mode(const std::string& name);

/// Raw Shapley values plus the clamped-normalized display attribution and the
/// provenance needed to reproduce the run.
struct AttributionResult {
    FeaturePartition partition;
    std::vector<double> raw;      // signed; Monte Carlo estimates may be negative
    std::vector<double> display;  // in [0,1], sums to 1
    ShapleyMode mode = ShapleyMode::Exact;
    double sampling_ratio = 1.0;
    std::uint64_t seed = 0;
    std::size_t coalition_count = 0;

    Task task = Task::CodeGeneration;
    std::string model_id;
    std::string comparator_name;
    std::string output_text;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Concatenates, in index order, the texts of features kept by the coalition.
/// Removed features contribute nothing: features own their trailing
/// whitespace, so plain concatenation of survivors stays well formed.
std::string assemble(const FeaturePartition& partition, const Coalition& coalition);

}  // namespace fshap

#endif  // FSHAP_CORE_HPP
