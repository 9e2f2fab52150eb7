#ifndef FSHAP_NOISE_HPP
#define FSHAP_NOISE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fshap/comparators.hpp"
#include "fshap/core.hpp"
#include "fshap/model_client.hpp"
#include "fshap/sampler.hpp"

namespace fshap {

enum class NoiseMode { Nonsensical, CrossSample };

NoiseMode parse_noise_mode(const std::string& name);  // "nonsensical" | "cross-sample"
std::string noise_mode_name(NoiseMode mode);

/// Curated nonsense sentences (well-formed prose, no actionable
/// instruction). Shipped as data/noise_pool.txt, one sentence per line.
struct NoisePool {
    std::vector<std::string> sentences;

    static NoisePool load(const std::string& path);
};

/// A partition with one deliberately irrelevant feature spliced in. The
/// partition is lossless against the *noisy* document; removing the noise
/// feature reassembles the original document byte-exactly, because the
/// separator whitespace belongs to the noise feature itself.
struct NoisyInstance {
    std::string instance_id;
    NoiseMode mode = NoiseMode::Nonsensical;
    FeaturePartition noisy;
    std::size_t noise_index = 0;
    std::uint64_t seed = 0;
};

/// Window for length matching: a candidate's whitespace-token count must lie
/// within ±3 of the partition's mean feature token count.
bool within_token_window(std::size_t candidate_tokens, double mean_feature_tokens);

/// Inserts one pool sentence (uniform over length-admissible candidates) at
/// a uniform position in [0, n]. Both draws come from the given seed:
/// sentence first, then position. Throws InjectionError(NoCandidate) when no
/// sentence fits the window.
std::pair<FeaturePartition, std::size_t> inject_nonsensical(const FeaturePartition& partition,
                                                            const NoisePool& pool,
                                                            std::uint64_t seed);

/// Same insertion scheme, but candidates are the features of every *other*
/// partition in the dataset (self excluded by source_id) that fit the
/// window.
std::pair<FeaturePartition, std::size_t> inject_cross_sample(
    const FeaturePartition& partition, const std::vector<FeaturePartition>& dataset,
    std::uint64_t seed);

/// Retention test: byte equality of the outputs before and after injection.
bool filter_unchanged(const std::string& original_output, const std::string& noisy_output);

/// The attribution mass landing on the injected feature.
double noise_score(const std::vector<double>& attribution, std::size_t noise_index);

/// n uniform draws in [0,1) divided by their sum (redrawn in the all-zero
/// corner case); the uninformed baseline.
std::vector<double> random_baseline(std::size_t n, std::uint64_t seed);

/// Prompt sent by llm_attributor, exposed for inspection and mock scripting.
std::string attributor_prompt(const std::string& prompt, const std::string& model_output,
                              const std::vector<std::string>& features);

/// LLM-as-an-attributor baseline: asks the provider to distribute importance
/// over the features. A response is accepted when it carries exactly one
/// score per feature, all in [0,1], summing to 1 within 0.01; accepted
/// scores are renormalized to sum exactly 1. Re-asks (bypassing the read
/// cache) up to max_retries times, then raises AttributorError.
std::vector<double> llm_attributor(const std::string& prompt, const std::string& model_output,
                                   const std::vector<std::string>& features, ModelClient& client,
                                   unsigned max_retries = 3);

// ---------------------------------------------------------------------------
// Interchange files
// ---------------------------------------------------------------------------

/// JSONL rows {"instance_id", "mode", "features": [...], "noise_index",
/// "seed"}.
void write_noisy_instances(const std::string& path, const std::vector<NoisyInstance>& instances);
std::vector<NoisyInstance> load_noisy_instances(const std::string& path);

/// One attributor's noise score on one retained instance; JSONL rows
/// {"instance_id", "task", "model", "attributor", "noise_score"}.
struct ScoreRow {
    std::string instance_id;
    Task task = Task::CodeGeneration;
    std::string model_id;
    std::string attributor;
    double noise_score = 0.0;
};

void write_score_rows(const std::string& path, const std::vector<ScoreRow>& rows);
std::vector<ScoreRow> load_score_rows(const std::string& path);

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

struct EvaluateOptions {
    /// Any of "featureshap", "random", "llm".
    std::vector<std::string> attributors{"featureshap", "random"};
    /// Unset → per-task default (code output → codebleu, text → embed-f1).
    std::optional<ComparatorConfig::Kind> comparator;
    ShapleyMode mode = ShapleyMode::Exact;
    double sampling_ratio = 1.0;
    std::uint64_t seed = 0;
    unsigned exact_cap = kDefaultExactCap;
    unsigned parallelism = 8;
};

/// Runs the retention filter and the requested attributors over every noisy
/// instance whose source document is present in `dataset`. Instances that
/// fail retention, exceed the exact cap, or rely on an unknown document are
/// skipped with a note to `log` (when non-null). `attributor_client` backs
/// the "llm" attributor and defaults to `model` when null.
std::vector<ScoreRow> evaluate_noisy(const std::vector<InputDocument>& dataset,
                                     const std::vector<NoisyInstance>& instances,
                                     ModelClient& model, const EvaluateOptions& opts,
                                     ModelClient* attributor_client = nullptr,
                                     std::ostream* log = nullptr);

}  // namespace fshap

#endif  // FSHAP_NOISE_HPP
