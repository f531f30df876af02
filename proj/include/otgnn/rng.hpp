#pragma once

#include <cstdint>
#include <vector>

namespace otgnn {

/// Counter-based deterministic RNG (splitmix64). Streams are derived from an
/// immutable base key, so `split(k)` is independent of how much the parent has
/// already consumed — training code derives one child stream per (epoch,
/// batch, graph, ...) tuple and replays bit-identically across runs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_(seed), state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n); n must be positive.
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                                 static_cast<unsigned __int128>(n)) >> 64);
    }

    /// Child stream keyed by (base, stream); unaffected by parent consumption.
    Rng split(std::uint64_t stream) const {
        std::uint64_t z = base_ ^ (0xD1B54A32D192ED03ULL * (stream + 1));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return Rng(z ^ (z >> 31));
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            int j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

private:
    std::uint64_t base_;
    std::uint64_t state_;
};

}  // namespace otgnn
