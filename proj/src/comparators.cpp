#include "fshap/comparators.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_set>

#include "fshap/model_client.hpp"
#include "fshap/pycode.hpp"
#include "fshap/rng.hpp"
#include "fshap/tokenize.hpp"

namespace fshap {

using json = nlohmann::json;

ComparatorConfig::Kind parse_comparator(const std::string& name) {
    if (name == "exact") return ComparatorConfig::Kind::Exact;
    if (name == "tfidf") return ComparatorConfig::Kind::Tfidf;
    if (name == "codebleu") return ComparatorConfig::Kind::CodeBleu;
    if (name == "embed-f1" || name == "embed_f1") return ComparatorConfig::Kind::EmbedF1;
    throw ContractViolation("unknown comparator: " + name);
}

std::string comparator_kind_name(ComparatorConfig::Kind kind) {
    switch (kind) {
        case ComparatorConfig::Kind::Exact: return "exact";
        case ComparatorConfig::Kind::Tfidf: return "tfidf";
        case ComparatorConfig::Kind::CodeBleu: return "codebleu";
        case ComparatorConfig::Kind::EmbedF1: return "embed-f1";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Exact match
// ---------------------------------------------------------------------------

double exact_match_sim(const std::string& a, const std::string& b) {
    return a == b ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// TF-IDF cosine
// ---------------------------------------------------------------------------

CorpusStats CorpusStats::from_documents(const std::vector<std::string>& docs) {
    CorpusStats stats;
    stats.n_docs_ = docs.size();
    for (const auto& doc : docs) {
        std::unordered_set<std::string> seen;
        for (auto& tok : word_tokens(doc)) {
            seen.insert(std::move(tok));
        }
        for (const auto& tok : seen) {
            ++stats.df_[tok];
        }
    }
    return stats;
}

double CorpusStats::idf(const std::string& token) const {
    std::size_t df = 0;
    if (auto it = df_.find(token); it != df_.end()) {
        df = it->second;
    }
    return std::log((1.0 + static_cast<double>(n_docs_)) / (1.0 + static_cast<double>(df))) + 1.0;
}

namespace {

std::unordered_map<std::string, std::size_t> term_counts(const std::string& text) {
    std::unordered_map<std::string, std::size_t> tf;
    for (auto& tok : word_tokens(text)) {
        ++tf[std::move(tok)];
    }
    return tf;
}

}  // namespace

double tfidf_cosine(const std::string& a, const std::string& b, const CorpusStats& stats) {
    const auto tf_a = term_counts(a);
    const auto tf_b = term_counts(b);
    if (tf_a.empty() || tf_b.empty()) {
        return 0.0;
    }

    double dot = 0.0;
    double norm_a = 0.0;
    for (const auto& [tok, count] : tf_a) {
        const double wa = static_cast<double>(count) * stats.idf(tok);
        norm_a += wa * wa;
        if (auto it = tf_b.find(tok); it != tf_b.end()) {
            dot += wa * static_cast<double>(it->second) * stats.idf(tok);
        }
    }
    double norm_b = 0.0;
    for (const auto& [tok, count] : tf_b) {
        const double wb = static_cast<double>(count) * stats.idf(tok);
        norm_b += wb * wb;
    }
    if (norm_a <= 0.0 || norm_b <= 0.0) {
        return 0.0;
    }
    // Rounding can push the cosine of identical vectors one ulp past 1.
    return std::min(1.0, dot / (std::sqrt(norm_a) * std::sqrt(norm_b)));
}

// ---------------------------------------------------------------------------
// CodeBLEU
// ---------------------------------------------------------------------------

namespace {

/// Unambiguous multiset key for an n-gram (length-prefixed join: token text
/// may contain any byte, including the would-be separator).
std::string gram_key(const std::vector<std::string>& toks, std::size_t from, std::size_t n) {
    std::string key;
    for (std::size_t k = 0; k < n; ++k) {
        const std::string& t = toks[from + k];
        key += std::to_string(t.size());
        key += ':';
        key += t;
    }
    return key;
}

double token_weight(const std::string& tok, const ComparatorConfig& cfg) {
    return py::is_keyword(tok) ? cfg.keyword_weight : cfg.base_weight;
}

/// BLEU over lexer tokens: modified n-gram precision up to
/// min(ngram_order, |candidate|), add-one smoothing on orders ≥ 2, brevity
/// penalty. `weighted` switches every gram's contribution from 1 to the mean
/// keyword/base weight of its tokens.
double bleu_metric(const std::vector<std::string>& cand, const std::vector<std::string>& ref,
                   const ComparatorConfig& cfg, bool weighted) {
    if (cand.empty()) {
        return 0.0;
    }
    const std::size_t max_order =
        std::min<std::size_t>(cfg.ngram_order, cand.size());

    double log_sum = 0.0;
    for (std::size_t n = 1; n <= max_order; ++n) {
        struct GramInfo {
            std::size_t cand_count = 0;
            std::size_t ref_count = 0;
            double weight = 1.0;
        };
        std::unordered_map<std::string, GramInfo> grams;

        double total = 0.0;
        for (std::size_t i = 0; i + n <= cand.size(); ++i) {
            GramInfo& info = grams[gram_key(cand, i, n)];
            if (info.cand_count == 0 && weighted) {
                double w = 0.0;
                for (std::size_t k = 0; k < n; ++k) w += token_weight(cand[i + k], cfg);
                info.weight = w / static_cast<double>(n);
            }
            ++info.cand_count;
            total += weighted ? info.weight : 1.0;
        }
        for (std::size_t i = 0; i + n <= ref.size(); ++i) {
            auto it = grams.find(gram_key(ref, i, n));
            if (it != grams.end()) {
                ++it->second.ref_count;
            }
        }
        double matched = 0.0;
        for (const auto& [_, info] : grams) {
            matched += static_cast<double>(std::min(info.cand_count, info.ref_count)) *
                       (weighted ? info.weight : 1.0);
        }

        double precision;
        if (n == 1) {
            precision = total > 0.0 ? matched / total : 0.0;
        } else {
            precision = (matched + 1.0) / (total + 1.0);
        }
        if (precision <= 0.0) {
            return 0.0;
        }
        log_sum += std::log(precision);
    }

    const double c_len = static_cast<double>(cand.size());
    const double r_len = static_cast<double>(ref.size());
    const double bp = c_len > r_len ? 1.0 : std::exp(1.0 - r_len / c_len);
    return bp * std::exp(log_sum / static_cast<double>(max_order));
}

/// Clipped multiset overlap: sum over distinct items of min(count_cand,
/// count_ref), divided by the reference total.
template <typename Key>
double clipped_match(const std::vector<Key>& cand_items, const std::vector<Key>& ref_items) {
    std::unordered_map<Key, std::size_t> ref_counts;
    for (const auto& item : ref_items) {
        ++ref_counts[item];
    }
    std::size_t matched = 0;
    for (const auto& item : cand_items) {
        auto it = ref_counts.find(item);
        if (it != ref_counts.end() && it->second > 0) {
            --it->second;
            ++matched;
        }
    }
    return static_cast<double>(matched) / static_cast<double>(ref_items.size());
}

std::string triple_key(const py::DataflowTriple& t) {
    return t.var + ':' + std::to_string(t.def_site) + ':' + std::to_string(t.use_site);
}

}  // namespace

CodeBleuBreakdown codebleu_breakdown(const std::string& candidate, const std::string& reference,
                                     const ComparatorConfig& cfg) {
    CodeBleuBreakdown out;

    const auto cand_toks = py::bleu_tokens(candidate);
    const auto ref_toks = py::bleu_tokens(reference);
    out.bleu = bleu_metric(cand_toks, ref_toks, cfg, /*weighted=*/false);
    out.weighted_bleu = bleu_metric(cand_toks, ref_toks, cfg, /*weighted=*/true);

    // Components undefined for the reference are dropped (weights
    // renormalized); a failed candidate parse scores 0 but stays in.
    const auto ref_analysis = py::analyze(reference);
    if (ref_analysis.has_value()) {
        const auto cand_analysis = py::analyze(candidate);

        const auto ref_sigs = py::subtree_signatures(ref_analysis->root);
        if (!ref_sigs.empty()) {
            out.ast_match = 0.0;
            if (cand_analysis.has_value()) {
                out.ast_match =
                    clipped_match(py::subtree_signatures(cand_analysis->root), ref_sigs);
            }
        }

        if (!ref_analysis->triples.empty()) {
            std::vector<std::string> ref_triples;
            for (const auto& t : ref_analysis->triples) ref_triples.push_back(triple_key(t));
            out.dataflow_match = 0.0;
            if (cand_analysis.has_value()) {
                std::vector<std::string> cand_triples;
                for (const auto& t : cand_analysis->triples) {
                    cand_triples.push_back(triple_key(t));
                }
                out.dataflow_match = clipped_match(cand_triples, ref_triples);
            }
        }
    }

    const std::array<std::optional<double>, 4> components{out.bleu, out.weighted_bleu,
                                                          out.ast_match, out.dataflow_match};
    double weight_sum = 0.0;
    double value_sum = 0.0;
    for (std::size_t i = 0; i < components.size(); ++i) {
        if (components[i].has_value()) {
            weight_sum += cfg.codebleu_weights[i];
            value_sum += cfg.codebleu_weights[i] * *components[i];
        }
    }
    out.total = weight_sum > 0.0 ? value_sum / weight_sum : 0.0;
    if (candidate.empty()) {
        out.total = 0.0;
    }
    return out;
}

double codebleu(const std::string& candidate, const std::string& reference,
                const ComparatorConfig& cfg) {
    return codebleu_breakdown(candidate, reference, cfg).total;
}

// ---------------------------------------------------------------------------
// Embedding F1
// ---------------------------------------------------------------------------

std::vector<std::vector<double>> HashedEmbedding::embed(const std::vector<std::string>& tokens) {
    std::vector<std::vector<double>> out;
    out.reserve(tokens.size());
    for (const auto& tok : tokens) {
        Rng rng(splitmix64(hash64(tok)));
        std::vector<double> v(dim_);
        double norm = 0.0;
        for (double& x : v) {
            x = 2.0 * rng.unit() - 1.0;
            norm += x * x;
        }
        norm = std::sqrt(norm);
        if (norm > 0.0) {
            for (double& x : v) x /= norm;
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::vector<std::vector<double>> HttpEmbeddingProvider::embed(
    const std::vector<std::string>& tokens) {
    json body = {{"tokens", tokens}};
    try {
        auto [status, text] = http_post_json(endpoint_url_, body.dump());
        if (status < 200 || status >= 300) {
            throw ComparatorError("embedding endpoint returned HTTP " + std::to_string(status));
        }
        json res = json::parse(text);
        auto vectors = res.at("vectors").get<std::vector<std::vector<double>>>();
        if (vectors.size() != tokens.size()) {
            throw ComparatorError("embedding endpoint returned " +
                                  std::to_string(vectors.size()) + " vectors for " +
                                  std::to_string(tokens.size()) + " tokens");
        }
        return vectors;
    } catch (const ComparatorError&) {
        throw;
    } catch (const std::exception& e) {
        throw ComparatorError(std::string("embedding provider failed: ") + e.what());
    }
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw ComparatorError("embedding dimensions disagree: " + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()));
    }
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na <= 0.0 || nb <= 0.0) {
        return 0.0;
    }
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

double greedy_side(const std::vector<std::vector<double>>& from,
                   const std::vector<std::vector<double>>& to) {
    double sum = 0.0;
    for (const auto& v : from) {
        double best = -1.0;
        for (const auto& w : to) {
            best = std::max(best, cosine(v, w));
        }
        sum += best;
    }
    return sum / static_cast<double>(from.size());
}

}  // namespace

double embed_f1(const std::string& candidate, const std::string& reference,
                EmbeddingProvider& provider) {
    const auto cand_toks = word_tokens(candidate);
    const auto ref_toks = word_tokens(reference);
    if (cand_toks.empty() || ref_toks.empty()) {
        return 0.0;
    }
    const auto cand_vecs = provider.embed(cand_toks);
    const auto ref_vecs = provider.embed(ref_toks);
    if (cand_vecs.size() != cand_toks.size() || ref_vecs.size() != ref_toks.size()) {
        throw ComparatorError("embedding provider returned a short vector list");
    }

    const double precision = std::max(0.0, greedy_side(cand_vecs, ref_vecs));
    const double recall = std::max(0.0, greedy_side(ref_vecs, cand_vecs));
    if (precision + recall <= 0.0) {
        return 0.0;
    }
    // Rounding can push the score of identical token sets one ulp past 1.
    return std::min(1.0, 2.0 * precision * recall / (precision + recall));
}

// ---------------------------------------------------------------------------
// Polymorphic wrappers
// ---------------------------------------------------------------------------

namespace {

class ExactComparator final : public Comparator {
public:
    double score(const std::string& candidate, const std::string& reference) override {
        return exact_match_sim(candidate, reference);
    }
    std::string name() const override { return "exact"; }
};

class TfidfComparator final : public Comparator {
public:
    double score(const std::string& candidate, const std::string& reference) override {
        if (!fitted_) {
            // Standalone use without a corpus: the two strings are the corpus.
            return tfidf_cosine(candidate, reference,
                                CorpusStats::from_documents({candidate, reference}));
        }
        return tfidf_cosine(candidate, reference, stats_);
    }

    void fit(const std::vector<std::string>& corpus) override {
        stats_ = CorpusStats::from_documents(corpus);
        fitted_ = true;
    }

    std::string name() const override { return "tfidf"; }

private:
    CorpusStats stats_;
    bool fitted_ = false;
};

class CodeBleuComparator final : public Comparator {
public:
    explicit CodeBleuComparator(ComparatorConfig cfg) : cfg_(std::move(cfg)) {}

    double score(const std::string& candidate, const std::string& reference) override {
        return codebleu(candidate, reference, cfg_);
    }
    std::string name() const override { return "codebleu"; }

private:
    ComparatorConfig cfg_;
};

class EmbedF1Comparator final : public Comparator {
public:
    explicit EmbedF1Comparator(std::unique_ptr<EmbeddingProvider> provider)
        : provider_(std::move(provider)) {}

    double score(const std::string& candidate, const std::string& reference) override {
        return embed_f1(candidate, reference, *provider_);
    }
    std::string name() const override { return "embed-f1"; }

private:
    std::unique_ptr<EmbeddingProvider> provider_;
};

}  // namespace

std::unique_ptr<Comparator> make_comparator(const ComparatorConfig& cfg) {
    double sum = 0.0;
    for (double w : cfg.codebleu_weights) {
        if (w < 0.0) {
            throw ContractViolation("codebleu weights must be nonnegative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ContractViolation("codebleu weights must sum to 1");
    }

    switch (cfg.kind) {
        case ComparatorConfig::Kind::Exact:
            return std::make_unique<ExactComparator>();
        case ComparatorConfig::Kind::Tfidf:
            return std::make_unique<TfidfComparator>();
        case ComparatorConfig::Kind::CodeBleu:
            return std::make_unique<CodeBleuComparator>(cfg);
        case ComparatorConfig::Kind::EmbedF1: {
            std::unique_ptr<EmbeddingProvider> provider;
            if (cfg.embedding_endpoint.empty()) {
                provider = std::make_unique<HashedEmbedding>();
            } else {
                provider = std::make_unique<HttpEmbeddingProvider>(cfg.embedding_endpoint);
            }
            return std::make_unique<EmbedF1Comparator>(std::move(provider));
        }
    }
    throw ContractViolation("unhandled comparator kind");
}

}  // namespace fshap
