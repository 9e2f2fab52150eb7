#include "fshap/shapley.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace fshap {

// ---------------------------------------------------------------------------
// Value table
// ---------------------------------------------------------------------------

ValueTable::ValueTable(unsigned n_features) : n_(n_features) {
    if (n_ == 0 || n_ > Coalition::kMaxFeatures) {
        throw ContractViolation("value table needs 1.." +
                                std::to_string(Coalition::kMaxFeatures) + " features");
    }
}

void ValueTable::set(const Coalition& coalition, double value) {
    if (coalition.empty()) {
        throw ContractViolation("v(∅) is fixed at 0 and cannot be set");
    }
    if (coalition.mask() >> n_) {
        throw ContractViolation("coalition uses features beyond the table width");
    }
    if (!(value >= 0.0 && value <= 1.0)) {
        throw ContractViolation("coalition value " + std::to_string(value) +
                                " is outside [0,1]");
    }
    values_[coalition] = value;
}

double ValueTable::at(const Coalition& coalition) const {
    if (coalition.empty()) {
        return 0.0;
    }
    auto it = values_.find(coalition);
    if (it == values_.end()) {
        throw IncompleteTable("no value recorded for coalition mask " +
                              std::to_string(coalition.mask()));
    }
    return it->second;
}

bool ValueTable::has(const Coalition& coalition) const {
    return coalition.empty() || values_.count(coalition) > 0;
}

double ValueTable::v_full() const {
    return at(Coalition::full(n_));
}

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

std::vector<double> exact_shapley(const ValueTable& table) {
    const unsigned n = table.n_features();
    const std::uint64_t full = Coalition::full(n).mask();
    for (std::uint64_t mask = 1; mask <= full; ++mask) {
        if (!table.has(Coalition(mask))) {
            throw IncompleteTable("exact Shapley needs all " + std::to_string(full) +
                                  " nonempty coalitions; mask " + std::to_string(mask) +
                                  " is missing");
        }
    }

    // weight[s] = s!(n-s-1)!/n! — the probability that, in a uniformly random
    // ordering, exactly the s members of S precede i.
    std::vector<double> weight(n);
    for (unsigned s = 0; s < n; ++s) {
        double w = 1.0 / static_cast<double>(n);
        for (unsigned k = 1; k <= s; ++k) {
            w *= static_cast<double>(k) / static_cast<double>(n - k);
        }
        weight[s] = w;
    }

    std::vector<double> phi(n, 0.0);
    for (unsigned i = 0; i < n; ++i) {
        const std::uint64_t bit = std::uint64_t{1} << i;
        for (std::uint64_t mask = 0; mask <= full; ++mask) {
            if (mask & bit) {
                continue;
            }
            const Coalition without(mask);
            const Coalition with(mask | bit);
            phi[i] += weight[without.count()] * (table.at(with) - table.at(without));
        }
    }
    return phi;
}

std::vector<double> mc_shapley(const ValueTable& table, const SamplingPlan& plan) {
    const unsigned n = plan.n_features;
    if (n != table.n_features()) {
        throw ContractViolation("plan and table disagree on the feature count");
    }
    std::vector<double> with_sum(n, 0.0), without_sum(n, 0.0);
    std::vector<std::size_t> with_cnt(n, 0), without_cnt(n, 0);

    for (const Coalition& c : plan.coalitions) {
        const double v = table.at(c);
        for (unsigned i = 0; i < n; ++i) {
            if (c.contains(i)) {
                with_sum[i] += v;
                ++with_cnt[i];
            } else {
                without_sum[i] += v;
                ++without_cnt[i];
            }
        }
    }

    std::vector<double> phi(n, 0.0);
    for (unsigned i = 0; i < n; ++i) {
        if (with_cnt[i] == 0 || without_cnt[i] == 0) {
            throw PlanInvariantViolated("feature " + std::to_string(i) +
                                        " lacks coalitions on one side of the estimator");
        }
        phi[i] = with_sum[i] / static_cast<double>(with_cnt[i]) -
                 without_sum[i] / static_cast<double>(without_cnt[i]);
    }
    return phi;
}

std::vector<double> normalize(const std::vector<double>& raw) {
    if (raw.empty()) {
        throw ContractViolation("cannot normalize an empty attribution vector");
    }
    std::vector<double> out(raw.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        out[i] = raw[i] > 0.0 ? raw[i] : 0.0;
        sum += out[i];
    }
    if (sum <= 1e-12) {
        const double uniform = 1.0 / static_cast<double>(raw.size());
        for (double& x : out) x = uniform;
        return out;
    }
    for (double& x : out) x /= sum;
    return out;
}

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

namespace {

/// Evaluates prompts[i] → outputs[i] with a bounded worker pool. The first
/// worker exception is rethrown on the caller thread after all workers join
/// (a failed coalition fails the whole instance — a partial table would
/// silently bias the estimate).
std::vector<std::string> generate_all(ModelClient& model, const std::vector<std::string>& prompts,
                                      unsigned parallelism) {
    std::vector<std::string> outputs(prompts.size());
    if (prompts.empty()) {
        return outputs;
    }
    const unsigned workers = static_cast<unsigned>(
        std::max<std::size_t>(1, std::min<std::size_t>(parallelism, prompts.size())));
    if (workers == 1) {
        for (std::size_t i = 0; i < prompts.size(); ++i) {
            outputs[i] = model.generate(prompts[i]).text;
        }
        return outputs;
    }

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= prompts.size()) {
                    return;
                }
                try {
                    outputs[i] = model.generate(prompts[i]).text;
                } catch (...) {
                    std::lock_guard lock(failure_mu);
                    if (!failure) {
                        failure = std::current_exception();
                    }
                    next.store(prompts.size());  // drain remaining work
                    return;
                }
            }
        });
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    return outputs;
}

}  // namespace

AttributionResult attribute_partition(const FeaturePartition& partition, Task task,
                                      ModelClient& model, Comparator& comparator,
                                      const AttributeOptions& opts) {
    const std::size_t n = partition.size();
    if (n == 0) {
        throw ContractViolation("cannot attribute an empty partition");
    }
    if (n > Coalition::kMaxFeatures) {
        throw ContractViolation("partition exceeds the coalition width limit");
    }

    // Single features and exact mode share the enumeration path; a
    // one-feature game has nothing to sample.
    const bool exact = opts.mode == ShapleyMode::Exact || n == 1;
    SamplingPlan plan = exact
                            ? enumerate_exact(static_cast<unsigned>(n), opts.exact_cap)
                            : sample_mc(static_cast<unsigned>(n), opts.sampling_ratio, opts.seed);

    const std::string original_text = partition.concat_text();
    const ModelOutput original = model.generate(original_text);

    const Coalition full = Coalition::full(static_cast<unsigned>(n));
    std::vector<std::string> prompts;
    std::vector<std::size_t> prompt_slot(plan.coalitions.size());
    std::vector<std::string> outputs(plan.coalitions.size());
    std::vector<bool> is_full(plan.coalitions.size(), false);
    for (std::size_t k = 0; k < plan.coalitions.size(); ++k) {
        if (plan.coalitions[k] == full) {
            // The full coalition is the unperturbed input; reuse the
            // original output instead of a second model call.
            is_full[k] = true;
            continue;
        }
        prompt_slot[k] = prompts.size();
        prompts.push_back(assemble(partition, plan.coalitions[k]));
    }
    std::vector<std::string> generated = generate_all(model, prompts, opts.parallelism);
    for (std::size_t k = 0; k < plan.coalitions.size(); ++k) {
        outputs[k] = is_full[k] ? original.text : std::move(generated[prompt_slot[k]]);
    }

    std::vector<std::string> corpus;
    corpus.reserve(outputs.size() + 1);
    corpus.push_back(original.text);
    for (const auto& o : outputs) {
        corpus.push_back(o);
    }
    comparator.fit(corpus);

    const double self = comparator.score(original.text, original.text);
    if (std::abs(self - 1.0) > 1e-9) {
        throw ComparatorError("comparator '" + comparator.name() +
                              "' is not reflexive on the original output (s(o,o) = " +
                              std::to_string(self) + "); attribution would be meaningless");
    }

    ValueTable table(static_cast<unsigned>(n));
    for (std::size_t k = 0; k < plan.coalitions.size(); ++k) {
        table.set(plan.coalitions[k], comparator.score(outputs[k], original.text));
    }

    AttributionResult result;
    result.partition = partition;
    result.raw = exact ? exact_shapley(table) : mc_shapley(table, plan);
    result.display = normalize(result.raw);
    result.mode = exact ? ShapleyMode::Exact : ShapleyMode::MonteCarlo;
    result.sampling_ratio = exact ? 1.0 : opts.sampling_ratio;
    result.seed = opts.seed;
    result.coalition_count = plan.coalitions.size();
    result.task = task;
    result.model_id = model.provider().model_id();
    result.comparator_name = comparator.name();
    result.output_text = original.text;
    return result;
}

AttributionResult attribute(const InputDocument& doc, ModelClient& model,
                            Comparator& comparator, const AttributeOptions& opts,
                            ModelClient* splitter_client) {
    FeaturePartition partition =
        split(doc, opts.splitter, splitter_client != nullptr ? splitter_client : &model);
    return attribute_partition(partition, doc.task, model, comparator, opts);
}

}  // namespace fshap
