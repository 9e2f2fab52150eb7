// Gate suite for the attribution engine: nine end-to-end checks, one
// PASS/FAIL line each, nonzero exit when anything fails. Each check states
// its tolerance in code; none of them touch the network.

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "fshap/comparators.hpp"
#include "fshap/core.hpp"
#include "fshap/dataset.hpp"
#include "fshap/model_client.hpp"
#include "fshap/noise.hpp"
#include "fshap/rng.hpp"
#include "fshap/sampler.hpp"
#include "fshap/shapley.hpp"
#include "fshap/splitters.hpp"
#include "fshap/stats.hpp"

using namespace fshap;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

// ---------------------------------------------------------------------------
// Tiny check harness
// ---------------------------------------------------------------------------

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool ok, const std::string& detail) {
    if (!ok) {
        throw CheckFailure(detail);
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    require(static_cast<bool>(in), "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------------------
// 1. Exact Shapley vs permutation-average brute force
// ---------------------------------------------------------------------------

std::vector<double> permutation_shapley(const ValueTable& table) {
    const unsigned n = table.n_features();
    std::vector<unsigned> perm(n);
    std::iota(perm.begin(), perm.end(), 0u);
    std::vector<double> sums(n, 0.0);
    double count = 0.0;
    do {
        Coalition built;
        double prev = 0.0;  // v of the empty prefix
        for (unsigned i : perm) {
            built = built.with(i);
            const double cur = table.at(built);
            sums[i] += cur - prev;
            prev = cur;
        }
        count += 1.0;
    } while (std::next_permutation(perm.begin(), perm.end()));
    for (double& s : sums) {
        s /= count;
    }
    return sums;
}

void check_exact_shapley() {
    const auto started = Clock::now();
    for (unsigned trial = 0; trial < 200; ++trial) {
        const unsigned n = 2 + trial % 7;  // n in 2..8
        Rng rng(derive_seed(1001, "table-" + std::to_string(trial)));
        ValueTable table(n);
        for (std::uint64_t mask = 1; mask < (std::uint64_t{1} << n); ++mask) {
            table.set(Coalition(mask), rng.unit());
        }

        const std::vector<double> phi = exact_shapley(table);
        const std::vector<double> oracle = permutation_shapley(table);
        for (unsigned i = 0; i < n; ++i) {
            require(std::abs(phi[i] - oracle[i]) <= 1e-9,
                    "trial " + std::to_string(trial) + " feature " + std::to_string(i) +
                        ": |phi - oracle| = " + std::to_string(std::abs(phi[i] - oracle[i])));
        }
        const double total = std::accumulate(phi.begin(), phi.end(), 0.0);
        require(std::abs(total - table.v_full()) <= 1e-9,
                "trial " + std::to_string(trial) + ": efficiency violated, sum phi = " +
                    std::to_string(total) + " vs v(N) = " + std::to_string(table.v_full()));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - started).count();
    require(secs < 5.0, "took " + std::to_string(secs) + "s, budget 5s");
}

// ---------------------------------------------------------------------------
// 2. Injected noise scores exactly zero under a noise-blind model
// ---------------------------------------------------------------------------

void check_noise_blind_zero() {
    const auto started = Clock::now();
    const NoisePool pool = NoisePool::load(FSHAP_NOISE_POOL_PATH);

    // Each document is a run of marker sentences; the model's output lists
    // exactly the markers present in the prompt, so it is blind to anything
    // else (in particular to the injected noise sentence).
    std::vector<InputDocument> dataset;
    std::vector<NoisyInstance> instances;
    std::vector<std::vector<std::string>> markers_by_doc;
    for (unsigned d = 0; d < 50; ++d) {
        const unsigned n_features = 4 + d % 5;  // 4..8
        std::vector<std::string> texts;
        std::vector<std::string> markers;
        for (unsigned f = 0; f < n_features; ++f) {
            const std::string marker =
                "marker" + std::to_string(d) + "x" + std::to_string(f);
            markers.push_back(marker);
            texts.push_back(marker + " alpha beta gamma. ");
        }
        texts.back().pop_back();  // last feature owns no trailing separator
        const std::string id = "doc-" + std::to_string(d);
        FeaturePartition partition = FeaturePartition::from_texts(id, texts, "nl_rule");

        InputDocument doc;
        doc.id = id;
        doc.task = Task::CodeGeneration;
        doc.text = partition.concat_text();
        dataset.push_back(doc);
        markers_by_doc.push_back(markers);

        auto [noisy, index] = inject_nonsensical(partition, pool, derive_seed(2002, id));
        NoisyInstance inst;
        inst.instance_id = id;
        inst.mode = NoiseMode::Nonsensical;
        inst.noisy = std::move(noisy);
        inst.noise_index = index;
        inst.seed = derive_seed(2002, id);
        instances.push_back(std::move(inst));
    }

    auto provider = std::make_shared<CallbackProvider>(
        "noise-blind", [&markers_by_doc](const std::string& prompt) {
            // Echo exactly the markers present; a prompt with none (the
            // noise sentence alone) gets an empty completion with zero
            // similarity to anything, so the baseline v is truly 0.
            std::string out;
            for (const auto& markers : markers_by_doc) {
                for (const auto& marker : markers) {
                    if (prompt.find(marker) != std::string::npos) {
                        out += out.empty() ? "present: " + marker : " " + marker;
                    }
                }
            }
            return out;
        });
    ModelClient model(provider, "");

    EvaluateOptions opts;
    opts.attributors = {"featureshap"};
    opts.comparator = ComparatorConfig::Kind::Tfidf;
    opts.mode = ShapleyMode::Exact;
    const std::vector<ScoreRow> rows = evaluate_noisy(dataset, instances, model, opts);

    require(rows.size() == 50, "expected 50 retained instances, got " +
                                   std::to_string(rows.size()));
    for (const auto& row : rows) {
        require(row.noise_score == 0.0, row.instance_id + ": noise score " +
                                            std::to_string(row.noise_score) + ", expected 0.0");
    }
    const double secs = std::chrono::duration<double>(Clock::now() - started).count();
    require(secs < 30.0, "took " + std::to_string(secs) + "s, budget 30s");
}

// ---------------------------------------------------------------------------
// 3. Random baseline calibration
// ---------------------------------------------------------------------------

void check_random_baseline() {
    constexpr unsigned kDraws = 10000;
    constexpr std::size_t n = 6;
    std::vector<double> coordinate_sum(n, 0.0);
    for (unsigned draw = 0; draw < kDraws; ++draw) {
        const std::vector<double> v =
            random_baseline(n, derive_seed(3003, "draw-" + std::to_string(draw)));
        for (std::size_t i = 0; i < n; ++i) {
            coordinate_sum[i] += v[i];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const double mean = coordinate_sum[i] / kDraws;
        require(std::abs(mean - 1.0 / 6.0) <= 0.01,
                "coordinate " + std::to_string(i) + " mean " + std::to_string(mean) +
                    " outside 1/6 +- 0.01");
    }
}

// ---------------------------------------------------------------------------
// 4. Monte-Carlo fidelity on additive games
// ---------------------------------------------------------------------------

std::vector<std::size_t> descending_order(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    return order;
}

void check_mc_fidelity() {
    unsigned full_ranking_hits = 0;
    unsigned top1_hits = 0;
    for (unsigned trial = 0; trial < 100; ++trial) {
        const unsigned n = 5 + trial % 6;  // n in 5..10
        Rng rng(derive_seed(4004, "mc-" + std::to_string(trial)));

        std::vector<double> weights(n);
        for (double& w : weights) {
            w = 0.05 + rng.unit();
        }
        // Double the strongest weight so the top feature is identifiable
        // above sampling noise. With near-tied iid weights the top-2 gap
        // shrinks faster than the mean-difference estimator's error, and no
        // correct implementation could hold a 95% top-1 bar.
        *std::max_element(weights.begin(), weights.end()) *= 2.0;
        const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
        for (double& w : weights) {
            w /= total + 0.01;  // v(S) stays strictly below 1 despite rounding
        }
        const auto additive = [&weights](const Coalition& c) {
            double v = 0.0;
            for (unsigned i : c.indices()) {
                v += weights[i];
            }
            return v;
        };

        const auto estimate = [&](double ratio, std::uint64_t seed) {
            const SamplingPlan plan = sample_mc(n, ratio, seed);
            ValueTable table(n);
            for (const Coalition& c : plan.coalitions) {
                table.set(c, additive(c));
            }
            return mc_shapley(table, plan);
        };

        const std::vector<std::size_t> truth = descending_order(weights);
        if (descending_order(estimate(1.0, trial)) == truth) {
            ++full_ranking_hits;
        }
        if (descending_order(estimate(0.5, trial ^ 0x5eedULL)).front() == truth.front()) {
            ++top1_hits;
        }
    }
    require(full_ranking_hits == 100, "ratio-1 ranking matched on only " +
                                          std::to_string(full_ranking_hits) + "/100 trials");
    require(top1_hits >= 95, "ratio-0.5 top-1 matched on only " + std::to_string(top1_hits) +
                                 "/100 trials, need >= 95");
}

// ---------------------------------------------------------------------------
// 5. Splitter losslessness on a 200-document corpus + exact cap
// ---------------------------------------------------------------------------

std::string synthetic_function(unsigned i) {
    std::string src;
    if (i % 3 == 0) {
        src += "# module helper " + std::to_string(i) + "\n";
    }
    src += "def fn" + std::to_string(i) + "(x, y=" + std::to_string(i % 7) + "):\n";
    if (i % 2 == 0) {
        src += "    \"\"\"Compute value " + std::to_string(i) +
               ".\n\n    Uses x and y.\n    \"\"\"\n";
    } else {
        src += "    '''Short doc.'''\n";
    }
    const unsigned statements = 1 + i % 4;
    for (unsigned s = 0; s < statements; ++s) {
        switch ((i + s) % 4) {
            case 0:
                src += "    total = x + y * " + std::to_string(s + 2) + "\n";
                break;
            case 1:
                src += "    if x > " + std::to_string(s) + ":\n        x = x - 1\n";
                break;
            case 2:
                src += "    items = [x, y, " + std::to_string(s) + "]  # inline\n";
                break;
            default:
                src += "    x = (x +\n         y)\n";  // statement spanning lines
                break;
        }
    }
    src += "    return x\n";
    return src;
}

std::string synthetic_docstring(unsigned i) {
    std::string text = "Process record " + std::to_string(i) + ". ";
    if (i % 4 == 0) {
        text += "Values near 3.14 are kept. ";
    }
    if (i % 3 == 0) {
        text += "Really?! Yes.\n    ";
    }
    text += "Returns the total";
    text += (i % 2 == 0) ? ". Trailing notes follow.\n" : "!";
    return text;
}

void check_splitter_losslessness() {
    unsigned lossless = 0;
    for (unsigned i = 0; i < 100; ++i) {
        InputDocument doc;
        doc.id = "code-" + std::to_string(i);
        doc.task = Task::CodeSummarization;
        doc.text = synthetic_function(i);
        doc.language_hint = "python";
        if (verify_lossless(split_code(doc), doc)) {
            ++lossless;
        }
    }
    for (unsigned i = 0; i < 100; ++i) {
        InputDocument doc;
        doc.id = "nl-" + std::to_string(i);
        doc.task = Task::CodeGeneration;
        doc.text = synthetic_docstring(i);
        if (verify_lossless(split_nl_rule(doc), doc)) {
            ++lossless;
        }
    }
    require(lossless == 200,
            "only " + std::to_string(lossless) + "/200 partitions were lossless");

    bool capped = false;
    try {
        enumerate_exact(13);
    } catch (const ExactModeCap& e) {
        capped = e.cap() == kDefaultExactCap;
    }
    require(capped, "13 features were not rejected by the exact cap of 12");
    require(enumerate_exact(12).size() == 4095, "12 features must enumerate 4095 coalitions");
}

// ---------------------------------------------------------------------------
// 6. Comparator bounds, reflexivity, and frozen codebleu oracles
// ---------------------------------------------------------------------------

std::string random_snippet(Rng& rng) {
    static const std::vector<std::string> words = {
        "def",  "return", "if",    "else", "for",   "total", "x",     "y",
        "item", "count",  "value", "data", "index", "sum",   "alpha", "result",
    };
    static const std::vector<std::string> glue = {
        "=", "+", "-", "*", "(", ")", ":", ",", "==", "<", "[", "]",
    };
    const unsigned tokens = 3 + static_cast<unsigned>(rng.below(10));
    std::string out = words[rng.below(words.size())];  // at least one word token
    for (unsigned t = 0; t < tokens; ++t) {
        out += (rng.below(6) == 0) ? "\n" : " ";
        out += (rng.below(3) == 0) ? glue[rng.below(glue.size())]
                                   : words[rng.below(words.size())];
    }
    return out;
}

void check_comparator_properties() {
    std::vector<std::unique_ptr<Comparator>> comparators;
    for (auto kind : {ComparatorConfig::Kind::Exact, ComparatorConfig::Kind::Tfidf,
                      ComparatorConfig::Kind::CodeBleu, ComparatorConfig::Kind::EmbedF1}) {
        ComparatorConfig cfg;
        cfg.kind = kind;
        comparators.push_back(make_comparator(cfg));
    }

    Rng rng(derive_seed(6006, "pairs"));
    for (unsigned pair = 0; pair < 1000; ++pair) {
        const std::string a = random_snippet(rng);
        const std::string b = random_snippet(rng);
        for (const auto& comparator : comparators) {
            comparator->fit({a, b});
            const double cross = comparator->score(a, b);
            require(cross >= 0.0 && cross <= 1.0,
                    comparator->name() + " out of [0,1] on pair " + std::to_string(pair) +
                        ": " + std::to_string(cross));
            const double self = comparator->score(a, a);
            require(std::abs(self - 1.0) <= 1e-9,
                    comparator->name() + " reflexivity broke on pair " +
                        std::to_string(pair) + ": s(x,x) = " + std::to_string(self));
        }
    }

    // Hand-derived composite values for five snippet pairs.
    const std::string ref = "def f(x):\n    y = x + 1\n    return y\n";
    const struct {
        std::string candidate;
        std::string reference;
        double expected;
    } frozen[] = {
        {ref, ref, 1.0},
        {"def f(x):\n    z = x + 1\n    return z\n", ref, 0.86613652937536789},
        {"a b c", "a b d", 0.69330176494822993},
        {"y = (", ref, 0.014156018563136839},
        {"", ref, 0.0},
    };
    for (const auto& fx : frozen) {
        const double got = codebleu(fx.candidate, fx.reference);
        require(std::abs(got - fx.expected) <= 1e-6,
                "codebleu(" + fx.candidate.substr(0, 12) + "...) = " + std::to_string(got) +
                    ", expected " + std::to_string(fx.expected));
    }
}

// ---------------------------------------------------------------------------
// 7. Statistics against brute-force oracles
// ---------------------------------------------------------------------------

double wilcoxon_enumeration_oracle(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    // Midranks of |d|.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(diffs[a]) < std::abs(diffs[b]);
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) {
            ++j;
        }
        const double mid = static_cast<double>(i + 1 + j + 1) / 2.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[order[k]] = mid;
        }
        i = j + 1;
    }

    double observed = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (diffs[k] > 0.0) {
            observed += ranks[k];
        }
    }
    double below = 0.0, above = 0.0;
    for (std::uint64_t signs = 0; signs < (std::uint64_t{1} << n); ++signs) {
        double w = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if ((signs >> k) & 1u) {
                w += ranks[k];
            }
        }
        if (w <= observed + 1e-9) below += 1.0;
        if (w >= observed - 1e-9) above += 1.0;
    }
    const double denom = std::pow(2.0, static_cast<double>(n));
    return std::min(1.0, 2.0 * std::min(below, above) / denom);
}

void check_statistics_oracles() {
    Rng rng(derive_seed(7007, "stats"));
    for (unsigned trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + trial % 12;
        PairedScores pairs;
        std::vector<double> nonzero;
        for (std::size_t k = 0; k < n; ++k) {
            // Quantized differences in [-0.99, 0.99] so ties and zeros occur.
            const double d = (static_cast<double>(rng.below(199)) - 99.0) / 100.0;
            pairs.a.push_back(d);
            pairs.b.push_back(0.0);
            if (d != 0.0) {
                nonzero.push_back(d);
            }
        }
        const WilcoxonResult got = wilcoxon_signed_rank(pairs);
        const double expected = nonzero.empty() ? 1.0 : wilcoxon_enumeration_oracle(nonzero);
        require(std::abs(got.p_value - expected) <= 1e-12,
                "wilcoxon trial " + std::to_string(trial) + ": p = " +
                    std::to_string(got.p_value) + ", oracle " + std::to_string(expected));
    }

    for (unsigned trial = 0; trial < 100; ++trial) {
        std::vector<double> a(1 + rng.below(30)), b(1 + rng.below(30));
        for (double& x : a) x = static_cast<double>(rng.below(20)) / 10.0;
        for (double& x : b) x = static_cast<double>(rng.below(20)) / 10.0;
        long long greater = 0, less = 0;
        for (double x : a) {
            for (double y : b) {
                if (x > y) ++greater;
                if (x < y) ++less;
            }
        }
        const double expected = static_cast<double>(greater - less) /
                                (static_cast<double>(a.size()) * static_cast<double>(b.size()));
        require(cliffs_delta(a, b).delta == expected,
                "cliffs delta mismatch on trial " + std::to_string(trial));
    }

    for (unsigned trial = 0; trial < 50; ++trial) {
        std::vector<double> p(1 + rng.below(8));
        for (double& x : p) x = rng.unit();
        const std::vector<double> adjusted = holm_correction(p);
        for (std::size_t k = 0; k < p.size(); ++k) {
            require(adjusted[k] >= p[k], "holm adjusted below raw on trial " +
                                             std::to_string(trial));
        }
    }
    const std::vector<double> frozen = holm_correction({0.01, 0.04, 0.03});
    require(std::abs(frozen[0] - 0.03) <= 1e-12 && std::abs(frozen[1] - 0.06) <= 1e-12 &&
                std::abs(frozen[2] - 0.06) <= 1e-12,
            "holm frozen case [0.01,0.04,0.03] -> [0.03,0.06,0.06] failed");
}

// ---------------------------------------------------------------------------
// 8. End-to-end determinism through the CLI
// ---------------------------------------------------------------------------

int run_command(const std::string& command) {
    const int status = std::system(command.c_str());
    if (status == -1) {
        return -1;
    }
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void check_end_to_end_determinism() {
    const fs::path root =
        fs::temp_directory_path() / ("fshap-accept-" + std::to_string(::getpid()));
    fs::remove_all(root);
    fs::create_directories(root);
    ::unsetenv("FS_CACHE_DIR");

    // Six documents whose first sentence keys the mock's canned completion,
    // so the output is unchanged by any injected noise.
    std::vector<InputDocument> dataset;
    std::string mock_rules;
    for (unsigned d = 0; d < 6; ++d) {
        InputDocument doc;
        doc.id = "sample-" + std::to_string(d);
        doc.task = Task::CodeGeneration;
        doc.text = "Build widget number " + std::to_string(d) + ". ";
        doc.text += "Keep the interface small. ";
        for (unsigned s = 0; s < d % 3; ++s) {
            doc.text += "Add detail item " + std::to_string(s) + ". ";
        }
        doc.text += "Return the widget.";
        dataset.push_back(doc);
        if (d) {
            mock_rules += ", ";
        }
        mock_rules += R"({"contains": "Build widget number )" + std::to_string(d) +
                      R"(.", "output": "def build)" + std::to_string(d) +
                      R"(():\n    return )" + std::to_string(d) + R"(\n"})";
    }
    write_dataset((root / "dataset.jsonl").string(), dataset);
    {
        std::ofstream mock(root / "mock.json");
        mock << R"({"model_id": "scripted", "rules": [)" << mock_rules
             << R"(], "default": "def fallback():\n    pass\n"})";
    }

    const std::string cli = FSHAP_CLI_PATH;
    const std::string ds = (root / "dataset.jsonl").string();
    const std::string mock = (root / "mock.json").string();
    const auto run_pipeline = [&](const std::string& tag) {
        const fs::path dir = root / tag;
        fs::create_directories(dir);
        const std::string log = " >> " + (dir / "log.txt").string() + " 2>&1";
        require(run_command(cli + " inject --dataset " + ds +
                            " --mode nonsensical --pool " + FSHAP_NOISE_POOL_PATH +
                            " --seed 7 --out " + (dir / "noisy.jsonl").string() + log) == 0,
                "inject exited nonzero (" + tag + ")");
        require(run_command(cli + " evaluate --dataset " + ds + " --noisy " +
                            (dir / "noisy.jsonl").string() + " --mock " + mock +
                            " --seed 7 --out " + dir.string() + log) == 0,
                "evaluate exited nonzero (" + tag + ")");
        require(run_command(cli + " stats --scores " +
                            (dir / "noise_scores.jsonl").string() + " --out " +
                            (dir / "results.csv").string() + log) == 0,
                "stats exited nonzero (" + tag + ")");
        return dir;
    };

    const fs::path a = run_pipeline("run-a");
    const fs::path b = run_pipeline("run-b");

    for (const char* file : {"noisy.jsonl", "noise_scores.jsonl", "results.csv"}) {
        const std::string bytes_a = read_file(a / file);
        require(!bytes_a.empty(), std::string(file) + " came out empty");
        require(bytes_a == read_file(b / file),
                std::string(file) + " differs between identically-seeded runs");
    }
    // The pipeline must actually have produced scored rows, not an empty table.
    require(load_score_rows((a / "noise_scores.jsonl").string()).size() >= 6,
            "expected at least one score row per document");

    fs::remove_all(root);
}

// ---------------------------------------------------------------------------
// 9. Exact attribution of a 12-feature instance under ten seconds
// ---------------------------------------------------------------------------

void check_exact_throughput() {
    const auto started = Clock::now();

    std::vector<std::string> texts;
    for (unsigned f = 0; f < 12; ++f) {
        texts.push_back("segment" + std::to_string(f) + " alpha beta gamma. ");
    }
    texts.back().pop_back();
    const FeaturePartition partition =
        FeaturePartition::from_texts("throughput", texts, "nl_rule");

    std::atomic<std::size_t> calls{0};
    auto provider = std::make_shared<CallbackProvider>(
        "echo", [&calls](const std::string& prompt) {
            calls.fetch_add(1);
            return "echo " + prompt;
        });
    ModelClient model(provider, "");

    ComparatorConfig cfg;
    cfg.kind = ComparatorConfig::Kind::Tfidf;
    auto comparator = make_comparator(cfg);

    AttributeOptions opts;
    opts.mode = ShapleyMode::Exact;
    opts.parallelism = 8;
    const AttributionResult result =
        attribute_partition(partition, Task::CodeGeneration, model, *comparator, opts);

    require(result.coalition_count == 4095,
            "expected 4095 coalitions, got " + std::to_string(result.coalition_count));
    require(calls.load() == 4095, "expected 4095 model calls, got " +
                                      std::to_string(calls.load()));
    const double mass =
        std::accumulate(result.display.begin(), result.display.end(), 0.0);
    require(std::abs(mass - 1.0) <= 1e-9,
            "display attribution sums to " + std::to_string(mass));

    const double secs = std::chrono::duration<double>(Clock::now() - started).count();
    require(secs < 10.0, "took " + std::to_string(secs) + "s, budget 10s");
}

}  // namespace

int main() {
    const struct {
        const char* name;
        void (*run)();
    } checks[] = {
        {"exact shapley matches the permutation oracle (200 tables, 1e-9)",
         check_exact_shapley},
        {"injected noise scores exactly 0.0 under a noise-blind model (50 instances)",
         check_noise_blind_zero},
        {"random baseline coordinate means within 1/6 +- 0.01 (10000 draws)",
         check_random_baseline},
        {"monte-carlo ranking fidelity on additive games (ratio 1 and 0.5)",
         check_mc_fidelity},
        {"splitters lossless on 200 mixed documents; exact cap rejects 13 features",
         check_splitter_losslessness},
        {"comparator bounds and reflexivity on 1000 pairs; frozen codebleu oracles (1e-6)",
         check_comparator_properties},
        {"statistics match enumeration oracles (wilcoxon, cliffs delta, holm)",
         check_statistics_oracles},
        {"identically-seeded CLI pipelines emit byte-identical artifacts",
         check_end_to_end_determinism},
        {"12-feature exact attribution (4095 coalitions) under 10 seconds",
         check_exact_throughput},
    };

    int failures = 0;
    int index = 0;
    for (const auto& check : checks) {
        ++index;
        const auto started = Clock::now();
        std::string detail;
        try {
            check.run();
        } catch (const std::exception& e) {
            detail = e.what();
        }
        const double secs = std::chrono::duration<double>(Clock::now() - started).count();
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.2fs", secs);
        if (detail.empty()) {
            std::cout << "PASS  " << index << ". " << check.name << "  [" << timing << "]\n";
        } else {
            ++failures;
            std::cout << "FAIL  " << index << ". " << check.name << ": " << detail << "  ["
                      << timing << "]\n";
        }
    }
    if (failures) {
        std::cout << failures << " of 9 acceptance checks failed\n";
    } else {
        std::cout << "all 9 acceptance checks passed\n";
    }
    return failures == 0 ? 0 : 1;
}
