#ifndef FSHAP_COMPARATORS_HPP
#define FSHAP_COMPARATORS_HPP

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "fshap/core.hpp"

namespace fshap {

struct ComparatorConfig {
    enum class Kind { Exact, Tfidf, CodeBleu, EmbedF1 };

    Kind kind = Kind::Exact;
    /// BLEU / weighted BLEU / AST match / data-flow match.
    std::array<double, 4> codebleu_weights{0.25, 0.25, 0.25, 0.25};
    double keyword_weight = 1.0;
    double base_weight = 0.2;
    unsigned ngram_order = 4;
    /// Remote token-embedding endpoint for embed-f1; empty selects the
    /// deterministic offline hashed embedding.
    std::string embedding_endpoint;
};

ComparatorConfig::Kind parse_comparator(const std::string& name);
std::string comparator_kind_name(ComparatorConfig::Kind kind);

/// Similarity in [0,1] between a perturbed-run output (candidate) and the
/// original output (reference). exact and tfidf are symmetric; codebleu and
/// embed_f1 are directional by design.
class Comparator {
public:
    virtual ~Comparator() = default;

    virtual double score(const std::string& candidate, const std::string& reference) = 0;

    /// Called once per instance with the original output plus every
    /// perturbed output before any score() call. Only tfidf uses it.
    virtual void fit(const std::vector<std::string>& corpus) { (void)corpus; }

    virtual std::string name() const = 0;
};

std::unique_ptr<Comparator> make_comparator(const ComparatorConfig& cfg);

// ---------------------------------------------------------------------------
// Exact match
// ---------------------------------------------------------------------------

/// 1.0 iff byte-equal, else 0.0.
double exact_match_sim(const std::string& a, const std::string& b);

// ---------------------------------------------------------------------------
// TF-IDF cosine
// ---------------------------------------------------------------------------

/// Document-frequency table over word tokens. idf(t) = ln((1+N)/(1+df)) + 1,
/// so unseen tokens still carry weight and a single-document corpus stays
/// well defined.
class CorpusStats {
public:
    static CorpusStats from_documents(const std::vector<std::string>& docs);

    double idf(const std::string& token) const;
    std::size_t document_count() const { return n_docs_; }

private:
    std::unordered_map<std::string, std::size_t> df_;
    std::size_t n_docs_ = 0;
};

/// Cosine of raw-term-frequency x idf vectors; 0 when either vector is
/// all-zero (including token-less strings).
double tfidf_cosine(const std::string& a, const std::string& b, const CorpusStats& stats);

// ---------------------------------------------------------------------------
// CodeBLEU-style composite
// ---------------------------------------------------------------------------

/// Per-component values. A disengaged optional means the component was
/// undefined for the reference (unparseable reference, or no data-flow) and
/// was dropped with its weight renormalized over the survivors. Candidate
/// parse failure is not undefined: it scores 0 on AST and data-flow.
struct CodeBleuBreakdown {
    std::optional<double> bleu;
    std::optional<double> weighted_bleu;
    std::optional<double> ast_match;
    std::optional<double> dataflow_match;
    double total = 0.0;
};

CodeBleuBreakdown codebleu_breakdown(const std::string& candidate, const std::string& reference,
                                     const ComparatorConfig& cfg = {});
double codebleu(const std::string& candidate, const std::string& reference,
                const ComparatorConfig& cfg = {});

// ---------------------------------------------------------------------------
// Embedding greedy-matching F1
// ---------------------------------------------------------------------------

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;

    /// One vector per token; all vectors of a provider share one dimension.
    virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) = 0;
    virtual std::string name() const = 0;
};

/// Offline default: per-token pseudo-random unit vector, seeded from the
/// token bytes, so the metric is deterministic and needs no model.
class HashedEmbedding : public EmbeddingProvider {
public:
    explicit HashedEmbedding(unsigned dim = 256) : dim_(dim) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
    std::string name() const override { return "hashed"; }

private:
    unsigned dim_;
};

/// Remote provider: POST {"tokens": [...]} to the endpoint, expecting
/// {"vectors": [[...], ...]}. Failures raise ComparatorError.
class HttpEmbeddingProvider : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(std::string endpoint_url)
        : endpoint_url_(std::move(endpoint_url)) {}

    std::vector<std::vector<double>> embed(const std::vector<std::string>& tokens) override;
    std::string name() const override { return "http"; }

private:
    std::string endpoint_url_;
};

/// Greedy-matching F1 over word tokens: precision is the mean over candidate
/// tokens of the best cosine against any reference token (negative means
/// clamped to 0), recall symmetric, harmonic mean; 0 when either side has no
/// tokens.
double embed_f1(const std::string& candidate, const std::string& reference,
                EmbeddingProvider& provider);

}  // namespace fshap

#endif  // FSHAP_COMPARATORS_HPP
