#pragma once

#include <cmath>
#include <cstdint>

namespace momdp {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derive an independent child seed from a parent seed and a stream index.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632BE59BD9B4E019ULL));
}

/// Counter-based random stream: the i-th draw is a pure function of (key, i),
/// so results never depend on platform distribution implementations.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed) : key_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return splitmix64(key_ ^ (counter_++ * 0xD1B54A32D192ED03ULL)); }

    /// Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) { return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n; }

    bool bernoulli(double p) { return uniform() < p; }

    /// Standard exponential variate.
    double exponential() { return -std::log1p(-uniform()); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace momdp
