#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace evolforge {

/// splitmix64 generator. Every sampling decision in the pipeline flows
/// through this so that a run is reproducible from a single 64-bit seed,
/// independent of platform or standard-library implementation.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform draw in [0, bound). bound must be > 0.
    std::uint64_t next_below(std::uint64_t bound) { return next() % bound; }

    /// Uniform real in [0, 1).
    double next_unit() {
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

/// FNV-1a 64-bit hash, used to derive per-bucket and per-record
/// sub-seeds from stable string keys.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::uint64_t fnv1a64(std::uint64_t h, std::string_view s) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// Derive an independent stream seed for a named sub-task of a run.
inline SplitMix64 derive_rng(std::uint64_t run_seed, std::string_view key) {
    return SplitMix64(run_seed ^ fnv1a64(key));
}

/// In-place Fisher-Yates shuffle driven by splitmix64.
template <typename T>
void fisher_yates_shuffle(std::vector<T>& items, SplitMix64& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        using std::swap;
        swap(items[i - 1], items[j]);
    }
}

/// First k indices of a shuffled [0, n) range: sampling without replacement.
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k,
                                               SplitMix64& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    fisher_yates_shuffle(idx, rng);
    if (k < n) idx.resize(k);
    return idx;
}

}  // namespace evolforge
