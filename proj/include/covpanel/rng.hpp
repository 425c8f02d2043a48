#ifndef COVPANEL_RNG_HPP
#define COVPANEL_RNG_HPP

#include <cstdint>
#include <random>
#include <vector>

namespace covpanel {

/// splitmix64 finalizer; combines a base seed with a stream index so that
/// unit r of a Monte-Carlo run depends only on (seed, r), never on
/// execution order.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(mix_seed(seed, stream));
}

/// Uniform integer on [0, bound) by rejection; avoids stdlib distribution
/// differences across platforms.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

inline int uniform_int(std::mt19937_64& rng, int lo, int hi) { // inclusive range
    return lo + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(hi - lo + 1)));
}

/// Fisher-Yates permutation of {0..n-1}; uniform over all bijections
/// (fixed points allowed).
inline std::vector<int> random_permutation(int n, std::mt19937_64& rng) {
    std::vector<int> p(n);
    for (int i = 0; i < n; ++i) p[i] = i;
    for (int i = n - 1; i > 0; --i) {
        int j = static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(i + 1)));
        std::swap(p[i], p[j]);
    }
    return p;
}

/// Sample k distinct indices from {0..n-1} (partial Fisher-Yates), in
/// selection order.
inline std::vector<int> sample_without_replacement(int n, int k, std::mt19937_64& rng) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
        int j = i + static_cast<int>(uniform_below(rng, static_cast<std::uint64_t>(n - i)));
        std::swap(pool[i], pool[j]);
        out.push_back(pool[i]);
    }
    return out;
}

} // namespace covpanel

#endif
