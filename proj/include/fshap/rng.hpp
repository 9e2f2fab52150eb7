#ifndef FSHAP_RNG_HPP
#define FSHAP_RNG_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace fshap {

// std::mt19937_64 is bit-exact across platforms; the std distributions are
// not. All draws therefore go through the hand-rolled helpers below so runs
// reproduce byte-identically anywhere.

std::uint64_t splitmix64(std::uint64_t x);

/// Stable 64-bit hash of a string (FNV-1a), used to fold ids into seeds.
std::uint64_t hash64(const std::string& s);

/// Per-instance seed derived from the run seed and an instance id.
std::uint64_t derive_seed(std::uint64_t run_seed, const std::string& instance_id);

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [0, bound) via rejection sampling; bound > 0.
    std::uint64_t below(std::uint64_t bound);

    /// Uniform double in [0, 1) with 53 random bits.
    double unit();

    /// Fisher-Yates shuffle (back-to-front, matching the classic algorithm).
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace fshap

#endif  // FSHAP_RNG_HPP
