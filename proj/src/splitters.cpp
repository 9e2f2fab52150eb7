#include "fshap/splitters.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>

#include "fshap/pycode.hpp"

namespace fshap {

using json = nlohmann::json;

SplitterConfig::Kind parse_splitter(const std::string& name) {
    if (name == "code") return SplitterConfig::Kind::Code;
    if (name == "nl-llm" || name == "nl_llm") return SplitterConfig::Kind::NlLlm;
    if (name == "nl-rule" || name == "nl_rule") return SplitterConfig::Kind::NlRule;
    throw ContractViolation("unknown splitter: " + name);
}

std::string splitter_kind_name(SplitterConfig::Kind kind) {
    switch (kind) {
        case SplitterConfig::Kind::Code: return "code";
        case SplitterConfig::Kind::NlLlm: return "nl-llm";
        case SplitterConfig::Kind::NlRule: return "nl-rule";
    }
    return "?";
}

bool verify_lossless(const FeaturePartition& partition, const InputDocument& doc) {
    return partition.well_formed() && partition.concat_text() == doc.text;
}

// ---------------------------------------------------------------------------
// Code splitter
// ---------------------------------------------------------------------------

namespace {

FeaturePartition from_boundaries(const InputDocument& doc, const std::vector<std::size_t>& cuts,
                                 std::string splitter_name) {
    // cuts: strictly increasing interior boundaries in (0, len).
    std::vector<std::string> texts;
    std::size_t prev = 0;
    for (std::size_t cut : cuts) {
        texts.push_back(doc.text.substr(prev, cut - prev));
        prev = cut;
    }
    texts.push_back(doc.text.substr(prev));
    return FeaturePartition::from_texts(doc.id, texts, std::move(splitter_name));
}

FeaturePartition whole_input(const InputDocument& doc, std::string splitter_name) {
    return FeaturePartition::from_texts(doc.id, {doc.text}, std::move(splitter_name));
}

}  // namespace

FeaturePartition split_code(const InputDocument& doc) {
    if (doc.text.empty()) {
        throw SplitError(SplitError::Kind::Empty, "cannot split empty input");
    }

    std::optional<std::vector<std::size_t>> starts;
    try {
        starts = py::function_statement_starts(doc.text);
    } catch (const py::ParseFailure& e) {
        throw SplitError(SplitError::Kind::Parse, e.what());
    }

    // Not a function, or a body with nothing past its docstring: the input
    // is still attributable as one opaque feature.
    if (!starts.has_value() || starts->empty()) {
        return whole_input(doc, "code(degenerate)");
    }

    std::vector<std::size_t> cuts;
    for (std::size_t s : *starts) {
        if (s > 0 && s < doc.text.size() && (cuts.empty() || s > cuts.back())) {
            cuts.push_back(s);
        }
    }
    if (cuts.empty()) {
        return whole_input(doc, "code(degenerate)");
    }
    return from_boundaries(doc, cuts, "code");
}

// ---------------------------------------------------------------------------
// Rule-based sentence splitter
// ---------------------------------------------------------------------------

namespace {

bool is_space(char c) {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

bool is_terminator(char c) {
    return c == '.' || c == '?' || c == '!';
}

bool all_space(const std::string& s, std::size_t from, std::size_t to) {
    for (std::size_t i = from; i < to; ++i) {
        if (!is_space(s[i])) return false;
    }
    return true;
}

}  // namespace

FeaturePartition split_nl_rule(const InputDocument& doc) {
    const std::string& text = doc.text;
    if (text.empty()) {
        throw SplitError(SplitError::Kind::Empty, "cannot split empty input");
    }

    std::vector<std::size_t> cuts;
    std::size_t segment_start = 0;
    std::size_t i = 0;
    const std::size_t n = text.size();
    while (i < n) {
        bool boundary = false;
        if (is_terminator(text[i])) {
            std::size_t j = i;
            while (j < n && is_terminator(text[j])) ++j;
            // "3.14" has no whitespace after the dot: not a sentence end.
            if (j == n || is_space(text[j])) {
                boundary = true;
                i = j;
            } else {
                i = j;
            }
        } else if (is_space(text[i])) {
            std::size_t j = i;
            bool saw_newline = false;
            while (j < n && is_space(text[j])) {
                saw_newline = saw_newline || text[j] == '\n' || text[j] == '\r';
                ++j;
            }
            if (saw_newline) {
                boundary = true;
            }
            i = j;
        } else {
            ++i;
            continue;
        }

        if (boundary) {
            // Attach all trailing whitespace to the finished sentence.
            while (i < n && is_space(text[i])) ++i;
            // Whitespace-only segments fold into their successor instead of
            // becoming features of their own.
            if (i < n && !all_space(text, segment_start, i)) {
                cuts.push_back(i);
                segment_start = i;
            }
        }
    }

    return from_boundaries(doc, cuts, "nl_rule");
}

// ---------------------------------------------------------------------------
// LLM splitter
// ---------------------------------------------------------------------------

namespace {

// Shipped demonstrations. Each is byte-lossless: the segments concatenate
// back to the input exactly, which is the very contract the prompt demands.
std::vector<IclExample> make_default_examples() {
    std::vector<IclExample> out;

    IclExample json_search;
    json_search.segments = {
        "Search for a specific string within the JSON data of files in a given directory and "
        "its subdirectories. ",
        "This function recursively scans the specified directory for JSON files, ",
        "then checks each file to see if the given string is present within the JSON data "
        "structure.\n",
        "Note that: ",
        "The string search is case-sensitive and looks for a match within the structure of "
        "the JSON data,",
        " not just as a substring in the file content. ",
        "If the directory does not contain any JSON files or if no JSON files contain the "
        "string, an empty list is returned.\n",
        "The function should output with:\n",
        "    list: A list of file paths (str) containing the string within their JSON data.",
    };
    for (const auto& s : json_search.segments) json_search.input += s;
    out.push_back(std::move(json_search));

    IclExample sort;
    sort.segments = {
        "Sort the given list of integers in ascending order.\n",
        "Return a new sorted list without modifying the input list.",
    };
    for (const auto& s : sort.segments) sort.input += s;
    out.push_back(std::move(sort));

    IclExample rolling;
    rolling.segments = {
        "Compute the rolling average of a numeric sequence. ",
        "The function should raise the exception for: ",
        "ValueError: If the window size is larger than the sequence length.\n",
        "The function should output with:\n",
        "    float: The mean of the final window.",
    };
    for (const auto& s : rolling.segments) rolling.input += s;
    out.push_back(std::move(rolling));

    return out;
}

/// Serializes the indexed map by hand so keys appear in numeric order
/// (generic JSON writers sort keys lexicographically, which scrambles
/// two-digit indices).
std::string indexed_map(const std::vector<std::string>& segments) {
    std::string out = "{";
    for (std::size_t i = 0; i < segments.size(); ++i) {
        if (i > 0) out += ", ";
        out += json(std::to_string(i)).dump();
        out += ": ";
        out += json(segments[i]).dump();
    }
    out += "}";
    return out;
}

}  // namespace

const std::vector<IclExample>& default_icl_examples() {
    static const std::vector<IclExample> examples = make_default_examples();
    return examples;
}

std::string splitter_prompt(const std::string& docstring,
                            const std::vector<IclExample>& examples) {
    std::string p;
    p += "You are a docstring segmenter. Split the user given docstring into granular "
         "sections.\n\n";
    p += "CRITICAL REQUIREMENTS:\n";
    p += "- You MUST always output a list of strings - no other format is acceptable\n";
    p += "- You MUST NOT paraphrase, rewrite, or modify any text - only extract exactly as "
         "written\n";
    p += "- Each string must be an exact substring from the original docstring\n";
    p += "- Include all original whitespace, newlines, and formatting exactly as they appear\n\n";
    p += "JSON FORMATTING REQUIREMENTS:\n";
    p += "- Output ONLY valid JSON - an object with numeric keys and string values: "
         "{\"0\": \"string1\", \"1\": \"string2\", \"2\": \"string3\"}\n";
    p += "- Each string value must be a meaningful coding sentence segments.\n";
    p += "- Every key must be a string representing the index: \"0\", \"1\", \"2\", etc.\n";
    p += "- Every value must be a string segment enclosed in double quotes\n";
    p += "- Ensure all quotes and special characters are properly escaped\n\n";
    p += "Here are examples, your response should follow this format:\n";
    for (const auto& ex : examples) {
        p += "INPUT:\n";
        p += json(ex.input).dump();
        p += "\n\nOUTPUT:\n";
        p += indexed_map(ex.segments);
        p += "\n\n";
    }
    p += "Docstring: ";
    p += docstring;
    return p;
}

namespace {

/// Extracts the indexed map from a model response: the outermost {...} is
/// parsed and keys "0", "1", ... must be present contiguously from zero.
/// Returns segments in key order, or nullopt when the response does not
/// carry a usable map.
std::optional<std::vector<std::string>> parse_indexed_map(const std::string& response) {
    const std::size_t open = response.find('{');
    const std::size_t close = response.rfind('}');
    if (open == std::string::npos || close == std::string::npos || close < open) {
        return std::nullopt;
    }
    json j;
    try {
        j = json::parse(response.substr(open, close - open + 1));
    } catch (const json::exception&) {
        return std::nullopt;
    }
    if (!j.is_object() || j.empty()) {
        return std::nullopt;
    }
    std::vector<std::string> segments;
    for (std::size_t i = 0; i < j.size(); ++i) {
        auto it = j.find(std::to_string(i));
        if (it == j.end() || !it->is_string()) {
            return std::nullopt;  // gap in the indices or non-string value
        }
        segments.push_back(it->get<std::string>());
    }
    return segments;
}

bool segments_usable(const std::vector<std::string>& segments, const std::string& text) {
    if (segments.empty()) return false;
    std::size_t total = 0;
    for (const auto& s : segments) {
        if (s.empty()) return false;
        total += s.size();
    }
    if (total != text.size()) return false;
    std::string concat;
    concat.reserve(total);
    for (const auto& s : segments) concat += s;
    return concat == text;
}

}  // namespace

FeaturePartition split_nl_llm(const InputDocument& doc, ModelClient& client,
                              const std::vector<IclExample>& examples, unsigned max_retries) {
    if (doc.text.empty()) {
        throw SplitError(SplitError::Kind::Empty, "cannot split empty input");
    }
    const std::string prompt = splitter_prompt(doc.text, examples);

    for (unsigned attempt = 0; attempt <= max_retries; ++attempt) {
        std::string response;
        try {
            // Retries bypass the read cache: a cached bad segmentation would
            // otherwise be returned verbatim forever.
            response = client.generate(prompt, /*use_cache=*/attempt == 0).text;
        } catch (const ProviderError&) {
            continue;  // treat as a failed attempt; fall back when exhausted
        }
        auto segments = parse_indexed_map(response);
        if (segments && segments_usable(*segments, doc.text)) {
            return FeaturePartition::from_texts(doc.id, *segments, "nl_llm");
        }
    }

    FeaturePartition fallback = split_nl_rule(doc);
    fallback.splitter_name = "nl_rule(fallback)";
    return fallback;
}

FeaturePartition split(const InputDocument& doc, const SplitterConfig& cfg, ModelClient* client) {
    switch (cfg.kind) {
        case SplitterConfig::Kind::Code:
            return split_code(doc);
        case SplitterConfig::Kind::NlRule:
            return split_nl_rule(doc);
        case SplitterConfig::Kind::NlLlm: {
            if (client == nullptr) {
                throw ContractViolation("nl-llm splitter requires a model client");
            }
            const auto& examples =
                cfg.icl_examples.empty() ? default_icl_examples() : cfg.icl_examples;
            return split_nl_llm(doc, *client, examples, cfg.max_retries);
        }
    }
    throw ContractViolation("unhandled splitter kind");
}

}  // namespace fshap
