#include "resample/rng.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace resample {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

RandomSource::RandomSource(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), engine_(derive_seed(seed, stream_id)) {}

std::uint64_t RandomSource::below(std::uint64_t bound) {
    if (bound == 0) throw std::invalid_argument("RandomSource::below: empty range");
    // Rejection on the top of the range keeps the draw exactly uniform.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x >= limit);
    return x % bound;
}

std::int64_t RandomSource::between(std::int64_t lo, std::int64_t hi) {
    if (hi < lo) throw std::invalid_argument("RandomSource::between: hi < lo");
    const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<std::int64_t>(engine_());
    return lo + static_cast<std::int64_t>(below(span));
}

double RandomSource::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::uint64_t RandomSource::geometric(double p) {
    if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("RandomSource::geometric: p out of (0,1]");
    if (p == 1.0) return 0;
    // Inversion; 1 - u lies in (0, 1].
    const double u = 1.0 - uniform01();
    return static_cast<std::uint64_t>(std::floor(std::log(u) / std::log1p(-p)));
}

std::vector<std::size_t> RandomSource::sample_without_replacement(std::size_t n, std::size_t k) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    // Sparse Fisher-Yates: only touched positions are stored.
    std::unordered_map<std::size_t, std::size_t> swapped;
    std::vector<std::size_t> out;
    out.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + below(n - i);
        auto at = [&](std::size_t idx) {
            auto it = swapped.find(idx);
            return it == swapped.end() ? idx : it->second;
        };
        const std::size_t vi = at(i);
        const std::size_t vj = at(j);
        out.push_back(vj);
        swapped[j] = vi;
    }
    return out;
}

RandomSource RandomSource::fork(std::uint64_t stream_id) const {
    return RandomSource(derive_seed(seed_, stream_ + 1), stream_id);
}

}  // namespace resample
