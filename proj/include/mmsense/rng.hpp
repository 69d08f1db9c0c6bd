#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

namespace mmsense {

// Counter-based pseudo-random stream (splitmix64 finalizer over an
// incrementing counter). Streams are named: the same seed with different
// names yields independent sequences, which keeps weight init, shuffling
// and sample noise decoupled from each other.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : base_(mix(seed, 0x9E3779B97F4A7C15ull)) {}

    Rng(std::uint64_t seed, std::string_view name) : base_(mix(seed, fnv1a(name))) {}

    Rng(std::uint64_t seed, std::string_view name, std::uint64_t index)
        : base_(mix(mix(seed, fnv1a(name)), index)) {}

    std::uint64_t next_u64() { return finalize(base_ + counter_++ * 0x9E3779B97F4A7C15ull); }

    // Uniform in [0, 1), 53 bits of resolution.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    // Uniform integer in [0, n). Lemire's multiply-shift; n must be > 0.
    std::uint64_t uniform_u64(std::uint64_t n) {
        return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; the pair's second value is cached.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = next_double();
        double u2 = next_double();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
        return finalize(a ^ (b + 0x9E3779B97F4A7C15ull + (a << 6) + (a >> 2)));
    }

    static std::uint64_t fnv1a(std::string_view s) {
        std::uint64_t h = 0xCBF29CE484222325ull;
        for (unsigned char c : s) {
            h ^= c;
            h *= 0x100000001B3ull;
        }
        return h;
    }

private:
    static std::uint64_t finalize(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ull;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBull;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Fisher-Yates with an explicit stream; std::shuffle is implementation
// defined, this one is reproducible everywhere.
template <typename T>
void seeded_shuffle(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.uniform_u64(i));
        std::swap(v[i - 1], v[j]);
    }
}

inline std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    seeded_shuffle(idx, rng);
    return idx;
}

}  // namespace mmsense
