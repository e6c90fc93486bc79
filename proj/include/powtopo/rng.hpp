#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace powtopo {

/** SplitMix64 finalizer. Bijective 64-bit mixer. */
constexpr std::uint64_t mix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/** Stream families derived from a root seed. Values are part of the seeding scheme and must not change. */
enum class StreamTag : std::uint64_t {
    Topology = 0x746f706f,
    Miner = 0x6d696e65,
    Selection = 0x73656c65,
    Oracle = 0x6f726163,
    Run = 0x72756e73,
};

inline constexpr int kSeedSchemeVersion = 1;

/**
 * Seed of stream (tag, a, b) under `root`.
 *
 * Scheme v1: mix64(mix64(mix64(root ^ mix64(tag)) + a) + b). Every random quantity in a run
 * (topology draws, each miner's mining timer, oracle rounds, per-run seeds of a sweep) comes
 * from its own stream, so changing how many values one consumer draws never shifts another.
 */
constexpr std::uint64_t derive_seed(std::uint64_t root, StreamTag tag, std::uint64_t a = 0,
                                    std::uint64_t b = 0) noexcept
{
    return mix64(mix64(mix64(root ^ mix64(static_cast<std::uint64_t>(tag))) + a) + b);
}

/**
 * Deterministic generator. Only fully specified algorithms are used (mt19937_64 and explicit
 * transforms) so that outputs are identical across standard library implementations.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    //! Uniform on [0, 1) with 53 bits of resolution.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    //! Exponential with the given mean.
    double exponential(double mean) { return -std::log1p(-uniform01()) * mean; }

    //! Uniform integer in [0, bound). bound must be > 0.
    std::uint64_t below(std::uint64_t bound)
    {
        const std::uint64_t threshold = (0 - bound) % bound;
        for (;;) {
            const std::uint64_t r = engine_();
            if (r >= threshold) return r % bound;
        }
    }

    //! Fisher-Yates over the first k positions: items[0..k) becomes a uniform k-sample without replacement.
    template <typename T>
    void partial_shuffle(std::span<T> items, std::size_t k)
    {
        const std::size_t n = items.size();
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            using std::swap;
            swap(items[i], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace powtopo
