#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace scgp {

using Rng = std::mt19937_64;

// Independent substream keyed by (seed, stream). Stream i sees the same draws
// no matter how the surrounding loop is scheduled, which is what makes
// ensemble generation order-independent.
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{
        static_cast<std::uint32_t>(seed & 0xffffffffu),
        static_cast<std::uint32_t>(seed >> 32),
        static_cast<std::uint32_t>(stream & 0xffffffffu),
        static_cast<std::uint32_t>(stream >> 32),
        0x5c67u};
    return Rng(seq);
}

// Unbiased draw from {0, ..., n-1} by rejection.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
    const std::uint64_t limit = Rng::max() - Rng::max() % n;
    std::uint64_t draw;
    do {
        draw = rng();
    } while (draw >= limit);
    return draw % n;
}

// Fisher-Yates; avoids std::shuffle so the permutation depends only on the
// engine's output sequence.
template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[uniform_below(rng, i)]);
    }
}

// First k entries of a random permutation of {0, ..., n-1}.
inline std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
        std::swap(idx[i], idx[i + uniform_below(rng, n - i)]);
    }
    idx.resize(k);
    return idx;
}

inline double draw_normal(Rng& rng, double mu, double sigma) {
    if (sigma == 0.0) return mu;
    std::normal_distribution<double> d(mu, sigma);
    return d(rng);
}

inline double draw_uniform(Rng& rng, double lo, double hi) {
    if (lo == hi) return lo;
    std::uniform_real_distribution<double> d(lo, hi);
    return d(rng);
}

}  // namespace scgp
