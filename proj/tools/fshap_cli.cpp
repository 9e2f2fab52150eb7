// fshap — black-box feature attribution for LLM inputs.
//
// Subcommands:
//   attribute  explain one document: split, perturb, score, Shapley
//   inject     build noisy variants of a dataset (dummy-feature probes)
//   evaluate   run attributors over noisy instances, write noise scores
//   stats      paired significance tests over noise-score files
//
// Exit codes: 0 success, 2 validation/usage error, 3 provider error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/program_options.hpp>

#include "fshap/core.hpp"
#include "fshap/dataset.hpp"
#include "fshap/model_client.hpp"
#include "fshap/noise.hpp"
#include "fshap/report.hpp"
#include "fshap/rng.hpp"
#include "fshap/shapley.hpp"
#include "fshap/splitters.hpp"
#include "fshap/stats.hpp"

namespace po = boost::program_options;
namespace fs = std::filesystem;
using namespace fshap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitProvider = 3;

void print_usage(std::ostream& out) {
    out << "usage: fshap <command> [options]\n"
           "\n"
           "commands:\n"
           "  attribute   attribute a model's output to spans of one input document\n"
           "  inject      splice a noise feature into each dataset document\n"
           "  evaluate    score attributors on noisy instances (noise scores)\n"
           "  stats       summarize noise scores with paired nonparametric tests\n"
           "\n"
           "run 'fshap <command> --help' for the command's options.\n";
}

/// Builds a ModelClient from --mock or --model/--endpoint. `role` names the
/// client in error messages ("model", "attributor model").
ModelClient make_client(const std::string& mock_path, const std::string& model_id,
                        const std::string& endpoint, const std::string& cache_dir,
                        const std::string& role) {
    if (!mock_path.empty()) {
        auto provider = std::make_shared<MockProvider>(load_mock_script(mock_path));
        return ModelClient(std::move(provider), resolve_cache_dir(cache_dir));
    }
    if (model_id.empty() || endpoint.empty()) {
        throw ContractViolation(role + ": either --mock SCRIPT or both --model and --endpoint "
                                       "are required");
    }
    ProviderConfig cfg;
    cfg.endpoint_url = endpoint;
    cfg.model_id = model_id;
    auto provider = std::make_shared<HttpChatProvider>(cfg);
    return ModelClient(std::move(provider), resolve_cache_dir(cache_dir));
}

InputDocument select_document(const std::vector<InputDocument>& docs, const std::string& id,
                              const std::string& origin) {
    if (docs.empty()) throw ContractViolation(origin + ": dataset is empty");
    if (id.empty()) {
        if (docs.size() == 1) return docs.front();
        std::string ids;
        for (std::size_t i = 0; i < docs.size() && i < 8; ++i) {
            if (i) ids += ", ";
            ids += docs[i].id;
        }
        if (docs.size() > 8) ids += ", ...";
        throw ContractViolation(origin + " holds " + std::to_string(docs.size()) +
                                " documents; pick one with --id (" + ids + ")");
    }
    for (const auto& doc : docs)
        if (doc.id == id) return doc;
    throw ContractViolation(origin + ": no document with id '" + id + "'");
}

SplitterConfig::Kind default_splitter(Task task) {
    // The attributed side is the *input*: natural language for generation
    // tasks, code for summarization tasks.
    return task == Task::CodeGeneration ? SplitterConfig::Kind::NlRule
                                        : SplitterConfig::Kind::Code;
}

ComparatorConfig::Kind default_comparator(Task task) {
    // The compared side is the *output*: code for generation, prose for
    // summarization.
    return task == Task::CodeGeneration ? ComparatorConfig::Kind::CodeBleu
                                        : ComparatorConfig::Kind::EmbedF1;
}

int cmd_attribute(const std::vector<std::string>& args) {
    std::string input_path, doc_id, task_str, model_id, endpoint, splitter_str, comparator_str;
    std::string mode_str = "exact", out_path, html_path, mock_path, cache_dir, splitter_model;
    std::string embedding_endpoint;
    double sampling_ratio = 1.0;
    std::uint64_t seed = 0;
    unsigned parallelism = 8;

    po::options_description desc("fshap attribute options");
    desc.add_options()
        ("help,h", "show this help")
        ("input", po::value(&input_path)->required(), "JSONL dataset holding the document")
        ("id", po::value(&doc_id), "document id (required when the file holds several)")
        ("task", po::value(&task_str), "codegen|codesum (default: the document's own task)")
        ("model", po::value(&model_id), "model identifier sent to the endpoint")
        ("endpoint", po::value(&endpoint), "chat-completions base URL")
        ("splitter", po::value(&splitter_str), "code|nl-llm|nl-rule (default by task)")
        ("comparator", po::value(&comparator_str), "exact|tfidf|codebleu|embed-f1 (default by task)")
        ("mode", po::value(&mode_str), "exact|mc (default exact)")
        ("sampling-ratio", po::value(&sampling_ratio), "mc extra-coalition ratio in [0,1] (default 1.0)")
        ("seed", po::value(&seed), "mc sampling seed (default 0)")
        ("out", po::value(&out_path)->required(), "attribution JSON output path")
        ("html", po::value(&html_path), "also write a heat-map HTML report here")
        ("mock", po::value(&mock_path), "scripted provider JSON; replaces --model/--endpoint")
        ("splitter-model", po::value(&splitter_model), "model id for the nl-llm splitter (default: --model)")
        ("embedding-endpoint", po::value(&embedding_endpoint), "remote embedding URL for embed-f1")
        ("cache-dir", po::value(&cache_dir), "response cache directory (FS_CACHE_DIR overrides)")
        ("parallelism", po::value(&parallelism), "concurrent coalition evaluations (default 8)");

    po::variables_map vm;
    po::store(po::command_line_parser(args).options(desc).run(), vm);
    if (vm.count("help")) {
        std::cout << desc << "\n";
        return kExitOk;
    }
    po::notify(vm);

    InputDocument doc = select_document(load_dataset(input_path), doc_id, input_path);
    if (!task_str.empty()) doc.task = parse_task(task_str);

    ModelClient model = make_client(mock_path, model_id, endpoint, cache_dir, "model");

    AttributeOptions opts;
    opts.splitter.kind =
        splitter_str.empty() ? default_splitter(doc.task) : parse_splitter(splitter_str);
    opts.splitter.llm_model_id =
        splitter_model.empty() ? model.provider().model_id() : splitter_model;
    opts.mode = parse_mode(mode_str);
    opts.sampling_ratio = sampling_ratio;
    opts.seed = seed;
    opts.parallelism = std::max(1u, parallelism);

    ComparatorConfig ccfg;
    ccfg.kind = comparator_str.empty() ? default_comparator(doc.task)
                                       : parse_comparator(comparator_str);
    ccfg.embedding_endpoint = embedding_endpoint;
    auto comparator = make_comparator(ccfg);

    AttributionResult result = attribute(doc, model, *comparator, opts);

    emit_json(result, out_path);
    if (!html_path.empty()) emit_html(result, result.output_text, html_path);

    std::cerr << "attributed " << doc.id << ": " << result.partition.size() << " features, "
              << result.coalition_count << " coalitions (" << mode_name(result.mode) << ")\n";
    return kExitOk;
}

int cmd_inject(const std::vector<std::string>& args) {
    std::string dataset_path, mode_str, pool_path, out_path;
    std::uint64_t seed = 0;

    po::options_description desc("fshap inject options");
    desc.add_options()
        ("help,h", "show this help")
        ("dataset", po::value(&dataset_path)->required(), "JSONL dataset to perturb")
        ("mode", po::value(&mode_str)->required(), "nonsensical|cross-sample")
        ("pool", po::value(&pool_path), "sentence pool file (required for nonsensical)")
        ("seed", po::value(&seed), "run seed; per-document seeds are derived from it")
        ("out", po::value(&out_path)->required(), "noisy-instance JSONL output path");

    po::variables_map vm;
    po::store(po::command_line_parser(args).options(desc).run(), vm);
    if (vm.count("help")) {
        std::cout << desc << "\n";
        return kExitOk;
    }
    po::notify(vm);

    NoiseMode mode = parse_noise_mode(mode_str);
    if (mode == NoiseMode::Nonsensical && pool_path.empty())
        throw ContractViolation("--pool is required for nonsensical injection");

    std::vector<InputDocument> docs = load_dataset(dataset_path);
    NoisePool pool;
    if (mode == NoiseMode::Nonsensical) pool = NoisePool::load(pool_path);

    // Offline splitters only: injection must not depend on a provider.
    std::vector<FeaturePartition> partitions;
    partitions.reserve(docs.size());
    for (const auto& doc : docs) {
        partitions.push_back(doc.task == Task::CodeGeneration ? split_nl_rule(doc)
                                                              : split_code(doc));
    }

    std::vector<NoisyInstance> instances;
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        std::uint64_t doc_seed = derive_seed(seed, docs[i].id);
        try {
            auto [noisy, index] = mode == NoiseMode::Nonsensical
                                      ? inject_nonsensical(partitions[i], pool, doc_seed)
                                      : inject_cross_sample(partitions[i], partitions, doc_seed);
            instances.push_back({docs[i].id, mode, std::move(noisy), index, doc_seed});
        } catch (const InjectionError& e) {
            std::cerr << "skip " << docs[i].id << ": " << e.what() << "\n";
            ++skipped;
        }
    }

    write_noisy_instances(out_path, instances);
    std::cerr << "injected " << instances.size() << "/" << docs.size() << " documents ("
              << noise_mode_name(mode) << (skipped ? ", " + std::to_string(skipped) + " skipped"
                                                   : std::string())
              << ") -> " << out_path << "\n";
    return kExitOk;
}

int cmd_evaluate(const std::vector<std::string>& args) {
    std::string dataset_path, noisy_path, model_id, endpoint, attributors_str, out_dir;
    std::string mock_path, comparator_str, mode_str = "exact", cache_dir;
    std::string attr_model, attr_endpoint, attr_mock;
    double sampling_ratio = 1.0;
    std::uint64_t seed = 0;
    unsigned parallelism = 8;

    po::options_description desc("fshap evaluate options");
    desc.add_options()
        ("help,h", "show this help")
        ("dataset", po::value(&dataset_path)->required(), "original JSONL dataset")
        ("noisy", po::value(&noisy_path)->required(), "noisy-instance JSONL from 'inject'")
        ("model", po::value(&model_id), "model identifier sent to the endpoint")
        ("endpoint", po::value(&endpoint), "chat-completions base URL")
        ("mock", po::value(&mock_path), "scripted provider JSON; replaces --model/--endpoint")
        ("attributors", po::value(&attributors_str)->default_value("featureshap,random"),
         "comma list of featureshap,random,llm")
        ("comparator", po::value(&comparator_str), "override the per-task comparator default")
        ("mode", po::value(&mode_str), "exact|mc (default exact)")
        ("sampling-ratio", po::value(&sampling_ratio), "mc extra-coalition ratio in [0,1]")
        ("seed", po::value(&seed), "run seed; per-instance seeds are derived from it")
        ("attributor-model", po::value(&attr_model), "model id for the llm attributor")
        ("attributor-endpoint", po::value(&attr_endpoint), "endpoint for the llm attributor")
        ("attributor-mock", po::value(&attr_mock), "scripted provider for the llm attributor")
        ("cache-dir", po::value(&cache_dir), "response cache directory (FS_CACHE_DIR overrides)")
        ("parallelism", po::value(&parallelism), "concurrent coalition evaluations (default 8)")
        ("out", po::value(&out_dir)->required(), "output directory for noise_scores.jsonl");

    po::variables_map vm;
    po::store(po::command_line_parser(args).options(desc).run(), vm);
    if (vm.count("help")) {
        std::cout << desc << "\n";
        return kExitOk;
    }
    po::notify(vm);

    std::vector<InputDocument> docs = load_dataset(dataset_path);
    std::vector<NoisyInstance> instances = load_noisy_instances(noisy_path);

    ModelClient model = make_client(mock_path, model_id, endpoint, cache_dir, "model");

    std::optional<ModelClient> attributor;
    if (!attr_mock.empty() || !attr_model.empty() || !attr_endpoint.empty())
        attributor.emplace(
            make_client(attr_mock, attr_model, attr_endpoint, cache_dir, "attributor model"));

    EvaluateOptions opts;
    opts.attributors.clear();
    std::stringstream list(attributors_str);
    for (std::string name; std::getline(list, name, ',');)
        if (!name.empty()) opts.attributors.push_back(name);
    if (opts.attributors.empty())
        throw ContractViolation("--attributors names no attributor");
    if (!comparator_str.empty()) opts.comparator = parse_comparator(comparator_str);
    opts.mode = parse_mode(mode_str);
    opts.sampling_ratio = sampling_ratio;
    opts.seed = seed;
    opts.parallelism = std::max(1u, parallelism);

    std::vector<ScoreRow> rows = evaluate_noisy(docs, instances, model, opts,
                                                attributor ? &*attributor : nullptr, &std::cerr);

    fs::create_directories(out_dir);
    std::string out_path = (fs::path(out_dir) / "noise_scores.jsonl").string();
    write_score_rows(out_path, rows);
    std::cerr << "wrote " << rows.size() << " score rows -> " << out_path << "\n";
    return kExitOk;
}

int cmd_stats(const std::vector<std::string>& args) {
    std::string scores_path, out_path;

    po::options_description desc("fshap stats options");
    desc.add_options()
        ("help,h", "show this help")
        ("scores", po::value(&scores_path)->required(),
         "noise_scores.jsonl, or a directory containing it")
        ("out", po::value(&out_path)->required(), "results CSV output path");

    po::variables_map vm;
    po::store(po::command_line_parser(args).options(desc).run(), vm);
    if (vm.count("help")) {
        std::cout << desc << "\n";
        return kExitOk;
    }
    po::notify(vm);

    fs::path input(scores_path);
    if (fs::is_directory(input)) input /= "noise_scores.jsonl";

    std::vector<ScoreRow> rows = load_score_rows(input.string());
    std::string csv = results_csv(rows);

    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw ReportError(out_path + ": cannot open for writing");
    out << csv;
    if (!out.flush()) throw ReportError(out_path + ": write failed");

    std::cerr << "wrote " << out_path << " from " << rows.size() << " score rows\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        print_usage(std::cerr);
        return kExitValidation;
    }
    std::string command = argv[1];
    if (command == "--help" || command == "-h" || command == "help") {
        print_usage(std::cout);
        return kExitOk;
    }
    std::vector<std::string> args(argv + 2, argv + argc);
    try {
        if (command == "attribute") return cmd_attribute(args);
        if (command == "inject") return cmd_inject(args);
        if (command == "evaluate") return cmd_evaluate(args);
        if (command == "stats") return cmd_stats(args);
        std::cerr << "error: unknown command '" << command << "'\n\n";
        print_usage(std::cerr);
        return kExitValidation;
    } catch (const ProviderError& e) {
        std::cerr << "provider error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const AttributorError& e) {
        std::cerr << "attributor error: " << e.what() << "\n";
        return kExitProvider;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}
