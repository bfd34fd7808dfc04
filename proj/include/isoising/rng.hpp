#ifndef ISOISING_RNG_HPP
#define ISOISING_RNG_HPP

#include <cstdint>
#include <string>

namespace isoising {

/// Deterministic splitmix64 generator; the name and seed travel with every
/// stochastic report so a run can be reproduced bit for bit.
class SplitMix64 {
  public:
    static constexpr const char* kName = "splitmix64";

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    std::uint32_t below(std::uint32_t n) {
        return static_cast<std::uint32_t>(next() % n);  // bias negligible for n << 2^64
    }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::uint64_t state_;
};

}  // namespace isoising

#endif
