#ifndef FSHAP_SAMPLER_HPP
#define FSHAP_SAMPLER_HPP

#include <cstdint>
#include <vector>

#include "fshap/core.hpp"

namespace fshap {

/// Largest feature count accepted for exact enumeration (2^12 − 1 = 4095
/// coalition evaluations); larger instances must use Monte Carlo.
inline constexpr unsigned kDefaultExactCap = 12;

/// The coalitions a Shapley run will evaluate. The empty coalition is never
/// planned: v(∅) is fixed at 0 by convention, so no model call is spent on
/// an empty prompt.
struct SamplingPlan {
    unsigned n_features = 0;
    ShapleyMode mode = ShapleyMode::Exact;
    double ratio = 1.0;
    std::uint64_t seed = 0;
    std::vector<Coalition> coalitions;

    std::size_t size() const { return coalitions.size(); }
};

/// All 2^n − 1 nonempty coalitions in binary counting order.
/// Throws ExactModeCap when n exceeds `cap`.
SamplingPlan enumerate_exact(unsigned n, unsigned cap = kDefaultExactCap);

/// Monte-Carlo plan: the full set N, every single-omission coalition N\{i},
/// plus ceil(ratio x max(0, 2^n − n − 2)) distinct extra proper nonempty
/// subsets drawn uniformly without replacement with the seeded generator.
/// For n = 1 the single omission would be ∅ and is skipped, leaving {N}.
SamplingPlan sample_mc(unsigned n, double ratio, std::uint64_t seed);

}  // namespace fshap

#endif  // FSHAP_SAMPLER_HPP
