// sampling.hpp — finite-shot emulation: seeded multinomial draws from a
// parent distribution and reconstruction of empirical frequencies.

#pragma once

#include "dqpe/qpe.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace dqpe {

// SplitMix64 (Steele, Lea, Flood): a tiny splittable generator with a
// 64-bit counter state. Every output artifact records the seed, so runs
// are reproducible stream-for-stream.
class SplitMix64 {
public:
    static constexpr const char* name = "splitmix64/v1";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Independent child stream, derived from the current state.
    SplitMix64 split() { return SplitMix64(next() ^ 0xA3EC647659359ACDULL); }

private:
    std::uint64_t state_;
};

struct EmpiricalDistribution {
    std::vector<std::int64_t> counts;  // per bitstring, sums to shots
    std::int64_t shots = 0;
    std::uint64_t seed = 0;
    ReadoutGrid grid;

    EmpiricalDistribution(std::vector<std::int64_t> c, std::int64_t n, std::uint64_t s,
                          ReadoutGrid g)
        : counts(std::move(c)), shots(n), seed(s), grid(g) {}
};

// Multinomial draw by inverse CDF: O(2^t) setup, O(t) per shot.
// Deterministic for a fixed seed.
inline EmpiricalDistribution sample(const ParentDistribution& dist, std::int64_t shots,
                                    std::uint64_t seed) {
    if (shots < 1)
        throw std::invalid_argument("sample: shot count must be at least 1");

    const int n = dist.grid.size();
    std::vector<double> cdf(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (int j = 0; j < n; ++j) {
        acc += std::max(0.0, dist.probabilities[j]);
        cdf[static_cast<std::size_t>(j)] = acc;
    }
    cdf.back() = std::max(cdf.back(), 1.0);  // guard the final bucket

    SplitMix64 rng(seed);
    std::vector<std::int64_t> counts(static_cast<std::size_t>(n), 0);
    for (std::int64_t s = 0; s < shots; ++s) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto j = std::min<std::size_t>(
            static_cast<std::size_t>(it - cdf.begin()), static_cast<std::size_t>(n - 1));
        ++counts[j];
    }
    return EmpiricalDistribution(std::move(counts), shots, seed, dist.grid);
}

// counts / shots, normalized by construction.
inline ParentDistribution frequencies(const EmpiricalDistribution& emp) {
    if (emp.shots < 1)
        throw std::invalid_argument("frequencies: shot count must be at least 1");
    RealVector f(emp.grid.size());
    for (int j = 0; j < emp.grid.size(); ++j)
        f[j] = static_cast<double>(emp.counts[static_cast<std::size_t>(j)]) /
               static_cast<double>(emp.shots);
    return ParentDistribution(std::move(f), emp.grid);
}

}  // namespace dqpe
