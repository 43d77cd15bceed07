#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

namespace fedsim {

/// splitmix64 finalizer; used to spread seed material.
uint64_t mix64(uint64_t z);

/// Deterministic per-(seed, client, round) stream seed. Changing one
/// client's behavior never perturbs another client's stream.
uint64_t derive_seed(uint64_t base_seed, uint64_t client, uint64_t round);

/// Self-contained RNG wrapper. Distributions are hand-rolled on top of
/// mt19937_64 so the draw sequence does not depend on the standard library
/// implementation.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(mix64(seed)) {}

    /// Uniform double in [0, 1).
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Standard normal via Box-Muller (pairs cached).
    double normal();

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Unbiased integer in [0, n) by rejection.
    uint64_t below(uint64_t n);

    int below_int(int n) { return static_cast<int>(below(static_cast<uint64_t>(n))); }

    /// Fisher-Yates shuffle using this stream only.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

}  // namespace fedsim
