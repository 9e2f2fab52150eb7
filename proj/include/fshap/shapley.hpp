#ifndef FSHAP_SHAPLEY_HPP
#define FSHAP_SHAPLEY_HPP

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "fshap/comparators.hpp"
#include "fshap/core.hpp"
#include "fshap/model_client.hpp"
#include "fshap/sampler.hpp"
#include "fshap/splitters.hpp"

namespace fshap {

/// Coalition → payoff v(S) in [0,1]. v(∅) is 0 by convention and needs no
/// entry; reading any other missing coalition raises IncompleteTable.
class ValueTable {
public:
    explicit ValueTable(unsigned n_features);

    void set(const Coalition& coalition, double value);
    double at(const Coalition& coalition) const;
    bool has(const Coalition& coalition) const;

    unsigned n_features() const { return n_; }
    double v_full() const;
    std::size_t size() const { return values_.size(); }

private:
    unsigned n_;
    std::unordered_map<Coalition, double, CoalitionHash> values_;
};

/// Exact Shapley values: φ_i = Σ_{S ⊆ N\{i}} |S|!(n−|S|−1)!/n! ·
/// [v(S∪{i}) − v(S)], with v(∅) = 0. Requires a complete table over all
/// nonempty subsets; efficiency Σφ = v(N) holds to ~1e-9 by construction.
std::vector<double> exact_shapley(const ValueTable& table);

/// Monte-Carlo estimate over a sampling plan:
/// φ̂_i = mean{v(S) : i ∈ S} − mean{v(S) : i ∉ S}, both means over the
/// plan's coalitions. A feature with an empty side (impossible for plans
/// honoring the single-omission core with n ≥ 2) raises
/// PlanInvariantViolated.
std::vector<double> mc_shapley(const ValueTable& table, const SamplingPlan& plan);

/// Display scale: clamp negatives to 0, then divide by the clamped sum; a
/// vanishing sum (≤ 1e-12) degrades to the uniform 1/n distribution.
std::vector<double> normalize(const std::vector<double>& raw);

struct AttributeOptions {
    SplitterConfig splitter;
    ShapleyMode mode = ShapleyMode::Exact;
    double sampling_ratio = 1.0;
    std::uint64_t seed = 0;
    unsigned exact_cap = kDefaultExactCap;
    /// Concurrent coalition evaluations (model calls); ≥ 1.
    unsigned parallelism = 8;
};

/// Attribution over an already-built partition: queries the model for the
/// original and every planned coalition, fits the comparator on all outputs,
/// verifies comparator reflexivity on the original output, scores, and runs
/// exact or Monte-Carlo Shapley. Single-feature partitions route to the
/// exact path (trivially [1.0]) with no perturbed model call.
AttributionResult attribute_partition(const FeaturePartition& partition, Task task,
                                      ModelClient& model, Comparator& comparator,
                                      const AttributeOptions& opts);

/// Full pipeline: split the document per opts.splitter, then
/// attribute_partition. `splitter_client` backs the LLM splitter and
/// defaults to `model` when null.
AttributionResult attribute(const InputDocument& doc, ModelClient& model,
                            Comparator& comparator, const AttributeOptions& opts,
                            ModelClient* splitter_client = nullptr);

}  // namespace fshap

#endif  // FSHAP_SHAPLEY_HPP
