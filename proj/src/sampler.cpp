#include "fshap/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <unordered_set>

#include "fshap/rng.hpp"

namespace fshap {

namespace {

void check_n(unsigned n) {
    if (n == 0) {
        throw ContractViolation("sampling plan needs at least one feature");
    }
    if (n > Coalition::kMaxFeatures) {
        throw ContractViolation("feature count " + std::to_string(n) + " exceeds the " +
                                std::to_string(Coalition::kMaxFeatures) + "-feature limit");
    }
}

}  // namespace

SamplingPlan enumerate_exact(unsigned n, unsigned cap) {
    check_n(n);
    if (n > cap) {
        throw ExactModeCap(n, cap);
    }
    SamplingPlan plan;
    plan.n_features = n;
    plan.mode = ShapleyMode::Exact;
    plan.ratio = 1.0;
    const std::uint64_t total = (std::uint64_t{1} << n) - 1;
    plan.coalitions.reserve(total);
    for (std::uint64_t mask = 1; mask <= total; ++mask) {
        plan.coalitions.emplace_back(mask);
    }
    return plan;
}

SamplingPlan sample_mc(unsigned n, double ratio, std::uint64_t seed) {
    check_n(n);
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
        throw ContractViolation("sampling ratio must lie in [0,1], got " + std::to_string(ratio));
    }

    SamplingPlan plan;
    plan.n_features = n;
    plan.mode = ShapleyMode::MonteCarlo;
    plan.ratio = ratio;
    plan.seed = seed;

    const std::uint64_t full = Coalition::full(n).mask();
    plan.coalitions.emplace_back(full);
    if (n > 1) {  // for n = 1 the only omission is ∅, which is never planned
        for (unsigned i = 0; i < n; ++i) {
            plan.coalitions.emplace_back(full & ~(std::uint64_t{1} << i));
        }
    }

    // Extra subsets beyond the essential core: everything nonempty and
    // proper except the n single omissions.
    const std::uint64_t remaining =
        n >= 2 ? (std::uint64_t{1} << n) - 2 - n : 0;
    std::uint64_t extra = 0;
    if (remaining > 0 && ratio > 0.0) {
        extra = static_cast<std::uint64_t>(
            std::ceil(ratio * static_cast<double>(remaining)));
        extra = std::min(extra, remaining);
    }
    if (extra == 0) {
        return plan;
    }

    Rng rng(seed);
    const unsigned popcount_full = n;
    if (n <= 22) {
        // Small space: enumerate the remaining masks and take the first
        // `extra` slots of a Fisher-Yates shuffle (exactly uniform without
        // replacement, and well defined even at ratio 1).
        std::vector<std::uint64_t> pool;
        pool.reserve(remaining);
        for (std::uint64_t mask = 1; mask < full; ++mask) {
            if (static_cast<unsigned>(std::popcount(mask)) == popcount_full - 1) {
                continue;  // single omission, already planned
            }
            pool.push_back(mask);
        }
        for (std::uint64_t k = 0; k < extra; ++k) {
            const std::uint64_t j = k + rng.below(pool.size() - k);
            std::swap(pool[k], pool[j]);
            plan.coalitions.emplace_back(pool[k]);
        }
    } else {
        // Vast space: rejection-sample distinct masks. Extra counts anywhere
        // near `remaining` are computationally absurd at this size (each
        // coalition costs a model call), so collisions stay rare.
        std::unordered_set<std::uint64_t> seen;
        seen.reserve(extra * 2);
        while (seen.size() < extra) {
            const std::uint64_t mask = 1 + rng.below(full - 1);  // in [1, full)
            if (static_cast<unsigned>(std::popcount(mask)) == popcount_full - 1) {
                continue;
            }
            if (seen.insert(mask).second) {
                plan.coalitions.emplace_back(mask);
            }
        }
    }
    return plan;
}

}  // namespace fshap
