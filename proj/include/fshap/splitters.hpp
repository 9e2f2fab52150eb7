#ifndef FSHAP_SPLITTERS_HPP
#define FSHAP_SPLITTERS_HPP

#include <string>
#include <vector>

#include "fshap/core.hpp"
#include "fshap/model_client.hpp"

namespace fshap {

/// One docstring-segmentation demonstration for the LLM splitter. Segments
/// must concatenate back to `input` byte-exactly.
struct IclExample {
    std::string input;
    std::vector<std::string> segments;
};

struct SplitterConfig {
    enum class Kind { Code, NlLlm, NlRule };

    Kind kind = Kind::NlRule;
    std::string llm_model_id;              // NlLlm only
    unsigned max_retries = 3;              // NlLlm: re-asks before falling back
    std::vector<IclExample> icl_examples;  // empty → built-in defaults
};

/// Parses "code" / "nl-llm" / "nl-rule" (CLI spellings).
SplitterConfig::Kind parse_splitter(const std::string& name);
std::string splitter_kind_name(SplitterConfig::Kind kind);

/// Grammar-based code splitter: one feature from the start of input through
/// the byte before the first top-level body statement (prefix + signature +
/// docstring), then one feature per top-level statement extending to the
/// next statement's start (the last runs to end of input).
///
/// Inputs that lex but are not a function degrade to a single whole-input
/// feature with splitter_name "code(degenerate)", as does a function whose
/// body holds no statements beyond its docstring. Unlexable input raises
/// SplitError(Parse); empty input raises SplitError(Empty).
FeaturePartition split_code(const InputDocument& doc);

/// Deterministic sentence splitter: boundaries after runs of '.', '?', '!'
/// (only when followed by whitespace or end of input) and after whitespace
/// runs containing a newline; delimiters and trailing whitespace stay with
/// the preceding feature, so the partition is lossless by construction.
FeaturePartition split_nl_rule(const InputDocument& doc);

/// The shipped demonstrations (three lossless docstring segmentations).
const std::vector<IclExample>& default_icl_examples();

/// LLM-backed docstring splitter. Sends the segmenter prompt with in-context
/// examples, parses the indexed-map response ("0", "1", ...), and accepts
/// only byte-lossless segmentations; re-asks (bypassing the read cache) up
/// to max_retries times, then falls back to split_nl_rule with splitter_name
/// "nl_rule(fallback)".
FeaturePartition split_nl_llm(const InputDocument& doc, ModelClient& client,
                              const std::vector<IclExample>& examples = default_icl_examples(),
                              unsigned max_retries = 3);

/// Full prompt text sent by split_nl_llm, exposed for inspection and tests.
std::string splitter_prompt(const std::string& docstring,
                            const std::vector<IclExample>& examples);

/// True iff the ordered concatenation of feature texts equals doc.text
/// byte-exactly.
bool verify_lossless(const FeaturePartition& partition, const InputDocument& doc);

/// Dispatches on cfg.kind. `client` is required for NlLlm and ignored
/// otherwise.
FeaturePartition split(const InputDocument& doc, const SplitterConfig& cfg,
                       ModelClient* client = nullptr);

}  // namespace fshap

#endif  // FSHAP_SPLITTERS_HPP
