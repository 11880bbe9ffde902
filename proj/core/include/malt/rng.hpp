#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace malt {

/// Deterministic random stream: std::mt19937_64 (fully specified by the
/// standard) with fixed output transforms, so equal seeds reproduce the same
/// values on every platform. Single-owner; not thread safe.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t nextU64() { return gen_(); }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller (pair cached).
    double gaussian();

    /// Uniform integer in [0, bound), rejection-sampled (unbiased).
    std::uint64_t below(std::uint64_t bound);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// Stable seed for a derived stream, e.g. (globalSeed, instanceIndex).
    static std::uint64_t deriveSeed(std::uint64_t seed, std::uint64_t stream);

  private:
    std::mt19937_64 gen_;
    bool haveSpare_ = false;
    double spare_ = 0.0;
};

} // namespace malt
