#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>

namespace dvote {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// FNV-1a, used to key per-question seeds off task ids so results are
// invariant under task-file reordering.
inline std::uint64_t stable_hash(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return base ^ splitmix64(index);
}

// mt19937_64 wrapper with explicit draw algorithms. std::discrete_distribution
// and friends are implementation-defined, which would break the bit-exact
// determinism contract across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    // uniform double in [0, 1) with 53 random bits
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    // index drawn from an (approximately normalized) probability vector
    std::size_t categorical(std::span<const double> probs) {
        const double u = uniform();
        double acc = 0.0;
        std::size_t last_positive = 0;
        for (std::size_t i = 0; i < probs.size(); ++i) {
            if (probs[i] > 0.0) last_positive = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last_positive;  // float slop: u fell past the accumulated mass
    }

    std::uint64_t next() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace dvote
