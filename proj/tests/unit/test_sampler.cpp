#include <catch2/catch.hpp>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fshap/sampler.hpp"

using namespace fshap;

namespace {

std::set<std::uint64_t> masks_of(const SamplingPlan& plan) {
    std::set<std::uint64_t> out;
    for (const Coalition& c : plan.coalitions) out.insert(c.mask());
    return out;
}

std::size_t expected_mc_size(unsigned n, double ratio) {
    const double pool = std::max(0.0, std::pow(2.0, n) - n - 2.0);
    const std::size_t extras = static_cast<std::size_t>(std::ceil(ratio * pool));
    const std::size_t all_nonempty = (std::size_t{1} << n) - 1;
    return std::min(std::size_t{n} + 1 + extras, all_nonempty);
}

}  // namespace

TEST_CASE("exact enumeration lists all nonempty subsets in counting order") {
    SamplingPlan plan = enumerate_exact(2);
    CHECK(plan.mode == ShapleyMode::Exact);
    CHECK(plan.n_features == 2);
    REQUIRE(plan.size() == 3);
    CHECK(plan.coalitions[0].mask() == 0b01);
    CHECK(plan.coalitions[1].mask() == 0b10);
    CHECK(plan.coalitions[2].mask() == 0b11);
}

TEST_CASE("exact enumeration sizes are 2^n - 1") {
    CHECK(enumerate_exact(1).size() == 1);
    CHECK(enumerate_exact(3).size() == 7);
    CHECK(enumerate_exact(10).size() == 1023);
    CHECK(enumerate_exact(12).size() == 4095);
}

TEST_CASE("exact enumeration never plans the empty coalition") {
    for (unsigned n : {1u, 4u, 8u}) {
        for (const Coalition& c : enumerate_exact(n).coalitions) {
            CHECK_FALSE(c.empty());
        }
    }
}

TEST_CASE("exact enumeration refuses feature counts beyond the cap") {
    try {
        enumerate_exact(13);
        FAIL("expected ExactModeCap");
    } catch (const ExactModeCap& e) {
        CHECK(e.cap() == 12);
    }
    // A custom cap moves the threshold.
    CHECK(enumerate_exact(13, 14).size() == 8191);
    CHECK_THROWS_AS(enumerate_exact(9, 8), ExactModeCap);
}

TEST_CASE("mc plan at ratio zero is the core: full set plus single omissions") {
    SamplingPlan plan = sample_mc(5, 0.0, 7);
    CHECK(plan.mode == ShapleyMode::MonteCarlo);
    REQUIRE(plan.size() == 6);

    const Coalition full = Coalition::full(5);
    CHECK(std::count(plan.coalitions.begin(), plan.coalitions.end(), full) == 1);
    for (unsigned i = 0; i < 5; ++i) {
        CHECK(std::count(plan.coalitions.begin(), plan.coalitions.end(), full.without(i)) == 1);
    }
}

TEST_CASE("mc plan at ratio one covers every nonempty coalition") {
    SamplingPlan mc = sample_mc(5, 1.0, 123);
    SamplingPlan exact = enumerate_exact(5);
    CHECK(mc.size() == exact.size());
    CHECK(masks_of(mc) == masks_of(exact));
}

TEST_CASE("mc plan size follows the ratio formula") {
    // n=3: pool = 2^3 - 3 - 2 = 3, ratio 0.5 -> 2 extras -> 4 + 2 = 6.
    CHECK(sample_mc(3, 0.5, 1).size() == 6);
    CHECK(sample_mc(3, 0.5, 1).size() == expected_mc_size(3, 0.5));

    for (unsigned n : {2u, 4u, 6u, 9u}) {
        for (double ratio : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0}) {
            SamplingPlan plan = sample_mc(n, ratio, 42);
            INFO("n=" << n << " ratio=" << ratio);
            CHECK(plan.size() == expected_mc_size(n, ratio));
        }
    }
}

TEST_CASE("mc plans hold distinct nonempty coalitions within range") {
    for (std::uint64_t seed : {0ull, 9ull, 77ull}) {
        SamplingPlan plan = sample_mc(7, 0.4, seed);
        auto masks = masks_of(plan);
        CHECK(masks.size() == plan.size());  // no duplicates
        for (std::uint64_t m : masks) {
            CHECK(m != 0);          // never empty
            CHECK(m < (1u << 7));   // within the feature universe
        }
    }
}

TEST_CASE("mc plans are deterministic in the seed") {
    SamplingPlan a = sample_mc(8, 0.5, 99);
    SamplingPlan b = sample_mc(8, 0.5, 99);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.coalitions[i] == b.coalitions[i]);
    }
    SamplingPlan c = sample_mc(8, 0.5, 100);
    CHECK(masks_of(a) != masks_of(c));
}

TEST_CASE("mc plan for a single feature is just the full set") {
    SamplingPlan plan = sample_mc(1, 1.0, 5);
    REQUIRE(plan.size() == 1);
    CHECK(plan.coalitions[0] == Coalition::full(1));
}

TEST_CASE("mc plan records its parameters") {
    SamplingPlan plan = sample_mc(6, 0.3, 11);
    CHECK(plan.n_features == 6);
    CHECK(plan.ratio == 0.3);
    CHECK(plan.seed == 11);
}
