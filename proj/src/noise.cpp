#include "fshap/noise.hpp"

#include <nlohmann/json.hpp>

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "fshap/rng.hpp"
#include "fshap/shapley.hpp"
#include "fshap/tokenize.hpp"

namespace fshap {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

NoiseMode parse_noise_mode(const std::string& name) {
    if (name == "nonsensical") return NoiseMode::Nonsensical;
    if (name == "cross-sample" || name == "cross_sample") return NoiseMode::CrossSample;
    throw ContractViolation("unknown noise mode: " + name);
}

std::string noise_mode_name(NoiseMode mode) {
    return mode == NoiseMode::Nonsensical ? "nonsensical" : "cross_sample";
}

NoisePool NoisePool::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReportError("cannot open noise pool: " + path);
    }
    NoisePool pool;
    std::string line;
    const auto blank = [](const std::string& s) {
        return std::all_of(s.begin(), s.end(),
                           [](unsigned char c) { return std::isspace(c); });
    };
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!blank(line)) {
            pool.sentences.push_back(line);
        }
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Injection
// ---------------------------------------------------------------------------

bool within_token_window(std::size_t candidate_tokens, double mean_feature_tokens) {
    return std::abs(static_cast<double>(candidate_tokens) - mean_feature_tokens) <= 3.0;
}

namespace {

double mean_feature_tokens(const FeaturePartition& partition) {
    std::size_t total = 0;
    for (const auto& f : partition.features) {
        total += whitespace_tokens(f.text).size();
    }
    return static_cast<double>(total) / static_cast<double>(partition.size());
}

/// Splices `sentence` in as feature `position` ∈ [0, n]. The separator space
/// belongs to the noise feature — leading when appended at the end, trailing
/// otherwise — so dropping the noise feature reassembles the original
/// document byte-exactly.
std::pair<FeaturePartition, std::size_t> insert_noise(const FeaturePartition& partition,
                                                      const std::string& sentence,
                                                      std::size_t position) {
    const std::size_t n = partition.size();
    std::vector<std::string> texts;
    texts.reserve(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (i == position) {
            texts.push_back(sentence + " ");
        }
        texts.push_back(partition.features[i].text);
    }
    if (position == n) {
        texts.push_back(" " + sentence);
    }
    FeaturePartition noisy = FeaturePartition::from_texts(
        partition.source_id, texts, partition.splitter_name + "+noise");
    return {std::move(noisy), position};
}

std::string rtrimmed(const std::string& s) {
    std::size_t end = s.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(s[end - 1])) != 0) {
        --end;
    }
    return s.substr(0, end);
}

}  // namespace

std::pair<FeaturePartition, std::size_t> inject_nonsensical(const FeaturePartition& partition,
                                                            const NoisePool& pool,
                                                            std::uint64_t seed) {
    if (partition.size() == 0) {
        throw ContractViolation("cannot inject into an empty partition");
    }
    const double mean = mean_feature_tokens(partition);
    std::vector<const std::string*> candidates;
    for (const auto& s : pool.sentences) {
        if (within_token_window(whitespace_tokens(s).size(), mean)) {
            candidates.push_back(&s);
        }
    }
    if (candidates.empty()) {
        throw InjectionError(InjectionError::Kind::NoCandidate,
                             "no pool sentence within ±3 tokens of the mean feature length (" +
                                 std::to_string(mean) + ")");
    }
    Rng rng(seed);
    const std::string& sentence = *candidates[rng.below(candidates.size())];
    const std::size_t position = rng.below(partition.size() + 1);
    return insert_noise(partition, sentence, position);
}

std::pair<FeaturePartition, std::size_t> inject_cross_sample(
    const FeaturePartition& partition, const std::vector<FeaturePartition>& dataset,
    std::uint64_t seed) {
    if (partition.size() == 0) {
        throw ContractViolation("cannot inject into an empty partition");
    }
    const double mean = mean_feature_tokens(partition);
    // Borrowed features keep their leading indentation (content) but not
    // their trailing whitespace: that was inter-feature separator in the
    // donor, and the insertion supplies its own.
    std::vector<std::string> candidates;
    for (const auto& donor : dataset) {
        if (donor.source_id == partition.source_id) {
            continue;
        }
        for (const auto& f : donor.features) {
            if (!within_token_window(whitespace_tokens(f.text).size(), mean)) {
                continue;
            }
            std::string text = rtrimmed(f.text);
            if (!text.empty()) {
                candidates.push_back(std::move(text));
            }
        }
    }
    if (candidates.empty()) {
        throw InjectionError(InjectionError::Kind::NoCandidate,
                             "no donor feature within ±3 tokens of the mean feature length (" +
                                 std::to_string(mean) + ")");
    }
    Rng rng(seed);
    const std::string sentence = candidates[rng.below(candidates.size())];
    const std::size_t position = rng.below(partition.size() + 1);
    return insert_noise(partition, sentence, position);
}

// ---------------------------------------------------------------------------
// Scores and baselines
// ---------------------------------------------------------------------------

bool filter_unchanged(const std::string& original_output, const std::string& noisy_output) {
    return original_output == noisy_output;
}

double noise_score(const std::vector<double>& attribution, std::size_t noise_index) {
    if (noise_index >= attribution.size()) {
        throw ContractViolation("noise index " + std::to_string(noise_index) +
                                " outside attribution of size " +
                                std::to_string(attribution.size()));
    }
    return attribution[noise_index];
}

std::vector<double> random_baseline(std::size_t n, std::uint64_t seed) {
    if (n == 0) {
        throw ContractViolation("random baseline needs at least one feature");
    }
    Rng rng(seed);
    std::vector<double> draws(n);
    for (;;) {
        double sum = 0.0;
        for (double& d : draws) {
            d = rng.unit();
            sum += d;
        }
        if (sum > 0.0) {
            for (double& d : draws) d /= sum;
            return draws;
        }
    }
}

// ---------------------------------------------------------------------------
// LLM-as-an-attributor
// ---------------------------------------------------------------------------

std::string attributor_prompt(const std::string& prompt, const std::string& model_output,
                              const std::vector<std::string>& features) {
    std::string p;
    p += "You are a code feature attribution analyst.\n";
    p += "Your task is to evaluate the importance of individual features in contributing to a "
         "given model output.\n";
    p += "Feature attribution scoring measures how much each feature contributes to the meaning "
         "captured in the model output.\n";
    p += "A higher score (1) indicates that the feature is more essential for understanding "
         "what the code does, while a lower score (0) indicates the feature is less relevant or "
         "even misleading.\n\n";
    p += "CRITICAL REQUIREMENTS:\n";
    p += "- All attribution scores MUST be between 0.0 and 1.0\n";
    p += "- The sum of all attribution scores MUST equal exactly 1.0\n";
    p += "- Provide exactly one score per feature\n\n";
    p += "Prompt: " + prompt + "\n";
    p += "Model output: " + model_output + "\n";
    p += "Please assign an attribution score to each of the following features: ";
    p += json(features).dump();
    p += "\n";
    p += "Remember that the sum of the feature attribution scores has to be 1.";
    return p;
}

namespace {

/// Pulls one score per feature out of a model response. Accepts a JSON array
/// (possibly embedded in prose), a JSON object with a "scores" array or
/// "0"/"1"/... keys, or — failing both — a plain scan for numeric literals.
/// Returns nullopt unless exactly `n` numbers emerge.
std::optional<std::vector<double>> parse_scores(const std::string& response, std::size_t n) {
    const std::size_t open = response.find('[');
    const std::size_t close = response.rfind(']');
    if (open != std::string::npos && close != std::string::npos && open < close) {
        try {
            json arr = json::parse(response.substr(open, close - open + 1));
            if (arr.is_array() && arr.size() == n) {
                std::vector<double> scores;
                for (const auto& x : arr) {
                    if (!x.is_number()) return std::nullopt;
                    scores.push_back(x.get<double>());
                }
                return scores;
            }
        } catch (const json::exception&) {
            // fall through to the other shapes
        }
    }
    try {
        json obj = json::parse(response);
        if (obj.is_object()) {
            std::vector<double> scores;
            if (obj.contains("scores") && obj["scores"].is_array()) {
                for (const auto& x : obj["scores"]) {
                    if (!x.is_number()) return std::nullopt;
                    scores.push_back(x.get<double>());
                }
            } else {
                for (std::size_t i = 0; i < n; ++i) {
                    auto it = obj.find(std::to_string(i));
                    if (it == obj.end() || !it->is_number()) break;
                    scores.push_back(it->get<double>());
                }
            }
            if (scores.size() == n) {
                return scores;
            }
        }
    } catch (const json::exception&) {
        // fall through to the scan
    }
    std::vector<double> scanned;
    const char* s = response.c_str();
    const char* end = s + response.size();
    while (s < end) {
        if (std::isdigit(static_cast<unsigned char>(*s)) ||
            (*s == '.' && s + 1 < end && std::isdigit(static_cast<unsigned char>(s[1])))) {
            char* after = nullptr;
            const double v = std::strtod(s, &after);
            if (after != s) {
                scanned.push_back(v);
                s = after;
                continue;
            }
        }
        ++s;
    }
    if (scanned.size() == n) {
        return scanned;
    }
    return std::nullopt;
}

bool acceptable(const std::vector<double>& scores) {
    double sum = 0.0;
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) {
            return false;
        }
        sum += s;
    }
    return std::abs(sum - 1.0) <= 0.01 && sum > 0.0;
}

}  // namespace

std::vector<double> llm_attributor(const std::string& prompt, const std::string& model_output,
                                   const std::vector<std::string>& features, ModelClient& client,
                                   unsigned max_retries) {
    if (features.empty()) {
        throw ContractViolation("attributor needs at least one feature");
    }
    const std::string request = attributor_prompt(prompt, model_output, features);
    std::string last_response;
    for (unsigned attempt = 0; attempt <= max_retries; ++attempt) {
        last_response = client.generate(request, /*use_cache=*/attempt == 0).text;
        auto scores = parse_scores(last_response, features.size());
        if (scores && acceptable(*scores)) {
            double sum = 0.0;
            for (double s : *scores) sum += s;
            for (double& s : *scores) s /= sum;  // exact renormalization
            return *scores;
        }
    }
    throw AttributorError("attributor returned no usable score distribution after " +
                          std::to_string(max_retries + 1) + " attempts; last response: " +
                          last_response.substr(0, 200));
}

// ---------------------------------------------------------------------------
// Interchange files
// ---------------------------------------------------------------------------

void write_noisy_instances(const std::string& path, const std::vector<NoisyInstance>& instances) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ReportError("cannot write noisy instances: " + path);
    }
    for (const auto& inst : instances) {
        ordered_json row;
        row["instance_id"] = inst.instance_id;
        row["mode"] = noise_mode_name(inst.mode);
        json features = json::array();
        for (const auto& f : inst.noisy.features) {
            features.push_back(f.text);
        }
        row["features"] = std::move(features);
        row["noise_index"] = inst.noise_index;
        row["seed"] = inst.seed;
        out << row.dump() << '\n';
    }
    if (!out) {
        throw ReportError("write failed: " + path);
    }
}

std::vector<NoisyInstance> load_noisy_instances(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReportError("cannot open noisy instances: " + path);
    }
    std::vector<NoisyInstance> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            json row = json::parse(line);
            NoisyInstance inst;
            inst.instance_id = row.at("instance_id").get<std::string>();
            inst.mode = parse_noise_mode(row.at("mode").get<std::string>());
            inst.noise_index = row.at("noise_index").get<std::size_t>();
            inst.seed = row.at("seed").get<std::uint64_t>();
            std::vector<std::string> texts =
                row.at("features").get<std::vector<std::string>>();
            inst.noisy = FeaturePartition::from_texts(inst.instance_id, texts, "noisy");
            if (inst.noise_index >= inst.noisy.size()) {
                throw ContractViolation("noise index out of range");
            }
            out.push_back(std::move(inst));
        } catch (const std::exception& e) {
            throw ReportError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

void write_score_rows(const std::string& path, const std::vector<ScoreRow>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw ReportError("cannot write scores: " + path);
    }
    for (const auto& row : rows) {
        ordered_json j;
        j["instance_id"] = row.instance_id;
        j["task"] = task_name(row.task);
        j["model"] = row.model_id;
        j["attributor"] = row.attributor;
        j["noise_score"] = row.noise_score;
        out << j.dump() << '\n';
    }
    if (!out) {
        throw ReportError("write failed: " + path);
    }
}

std::vector<ScoreRow> load_score_rows(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ReportError("cannot open scores: " + path);
    }
    std::vector<ScoreRow> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) {
            continue;
        }
        try {
            json j = json::parse(line);
            ScoreRow row;
            row.instance_id = j.at("instance_id").get<std::string>();
            row.task = parse_task(j.at("task").get<std::string>());
            row.model_id = j.at("model").get<std::string>();
            row.attributor = j.at("attributor").get<std::string>();
            row.noise_score = j.at("noise_score").get<double>();
            out.push_back(std::move(row));
        } catch (const std::exception& e) {
            throw ReportError(path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Harness
// ---------------------------------------------------------------------------

namespace {

ComparatorConfig::Kind default_comparator_for(Task task) {
    // The comparator scores *outputs*: generated code for code generation,
    // generated prose for summarization.
    return task == Task::CodeGeneration ? ComparatorConfig::Kind::CodeBleu
                                        : ComparatorConfig::Kind::EmbedF1;
}

}  // namespace

std::vector<ScoreRow> evaluate_noisy(const std::vector<InputDocument>& dataset,
                                     const std::vector<NoisyInstance>& instances,
                                     ModelClient& model, const EvaluateOptions& opts,
                                     ModelClient* attributor_client, std::ostream* log) {
    std::unordered_map<std::string, const InputDocument*> by_id;
    for (const auto& doc : dataset) {
        by_id[doc.id] = &doc;
    }
    auto note = [log](const std::string& msg) {
        if (log != nullptr) {
            *log << msg << '\n';
        }
    };

    std::vector<ScoreRow> rows;
    for (const auto& inst : instances) {
        auto it = by_id.find(inst.instance_id);
        if (it == by_id.end()) {
            note("skip " + inst.instance_id + ": not in dataset");
            continue;
        }
        const InputDocument& doc = *it->second;

        const std::string original_output = model.generate(doc.text).text;
        const std::string noisy_text = inst.noisy.concat_text();
        const std::string noisy_output = model.generate(noisy_text).text;
        if (!filter_unchanged(original_output, noisy_output)) {
            note("skip " + inst.instance_id + ": output changed under noise");
            continue;
        }
        const std::size_t n = inst.noisy.size();
        if (opts.mode == ShapleyMode::Exact && n > opts.exact_cap) {
            note("skip " + inst.instance_id + ": " + std::to_string(n) +
                 " features exceed the exact cap of " + std::to_string(opts.exact_cap));
            continue;
        }

        const std::uint64_t inst_seed = derive_seed(opts.seed, inst.instance_id);
        for (const auto& attributor : opts.attributors) {
            double score = 0.0;
            if (attributor == "featureshap") {
                ComparatorConfig ccfg;
                ccfg.kind = opts.comparator.value_or(default_comparator_for(doc.task));
                auto comparator = make_comparator(ccfg);
                AttributeOptions aopts;
                aopts.mode = opts.mode;
                aopts.sampling_ratio = opts.sampling_ratio;
                aopts.seed = inst_seed;
                aopts.exact_cap = opts.exact_cap;
                aopts.parallelism = opts.parallelism;
                AttributionResult res =
                    attribute_partition(inst.noisy, doc.task, model, *comparator, aopts);
                score = noise_score(res.display, inst.noise_index);
            } else if (attributor == "random") {
                score = noise_score(random_baseline(n, derive_seed(inst_seed, "random")),
                                    inst.noise_index);
            } else if (attributor == "llm") {
                std::vector<std::string> features;
                for (const auto& f : inst.noisy.features) {
                    features.push_back(f.text);
                }
                ModelClient& client =
                    attributor_client != nullptr ? *attributor_client : model;
                score = noise_score(llm_attributor(noisy_text, original_output, features, client),
                                    inst.noise_index);
            } else {
                throw ContractViolation("unknown attributor: " + attributor);
            }
            rows.push_back(ScoreRow{inst.instance_id, doc.task, model.provider().model_id(),
                                    attributor, score});
        }
    }
    return rows;
}

}  // namespace fshap
