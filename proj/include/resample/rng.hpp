#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace resample {

// splitmix64 finalizer. Used for all seed derivation so that a single run seed
// fans out into trial seeds and per-stream seeds deterministically.
std::uint64_t splitmix64(std::uint64_t x);

// Seed of sub-stream `stream` under `seed`. Trial k of a run uses
// derive_seed(run_seed, k); inside a trial, stream ids name independent users
// (realizations, adversary, algorithm, ...).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

namespace streams {
inline constexpr std::uint64_t realization = 0;
inline constexpr std::uint64_t adversary = 1;
inline constexpr std::uint64_t algorithm = 2;
inline constexpr std::uint64_t setup = 3;
}  // namespace streams

// Deterministic random source. The engine output is fixed by the standard;
// the draws below avoid std::*_distribution so results do not depend on the
// standard library implementation.
class RandomSource {
   public:
    RandomSource(std::uint64_t seed, std::uint64_t stream_id);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_; }

    std::uint64_t next_u64() { return engine_(); }
    // Uniform in [0, bound). bound must be positive.
    std::uint64_t below(std::uint64_t bound);
    // Uniform in [lo, hi].
    std::int64_t between(std::int64_t lo, std::int64_t hi);
    // Uniform in [0, 1) with 53 random bits.
    double uniform01();
    bool bernoulli(double p) { return uniform01() < p; }
    // Number of failures before the first success, success probability p.
    std::uint64_t geometric(double p);

    template <class T>
    const T& pick(std::span<const T> items) {
        return items[below(items.size())];
    }
    template <class T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }
    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k);

    // A child source for a named sub-stream of this source's seed.
    RandomSource fork(std::uint64_t stream_id) const;

   private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::mt19937_64 engine_;
};

}  // namespace resample
