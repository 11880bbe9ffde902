#include "malt/rng.hpp"

#include <cmath>
#include <numbers>

namespace malt {

double Rng::gaussian() {
    if (haveSpare_) {
        haveSpare_ = false;
        return spare_;
    }
    // Box-Muller on (0,1] uniforms; u1 > 0 so the log is finite.
    double u1 = 1.0 - uniform();
    double u2 = uniform();
    double mag = std::sqrt(-2.0 * std::log(u1));
    double ang = 2.0 * std::numbers::pi * u2;
    spare_ = mag * std::sin(ang);
    haveSpare_ = true;
    return mag * std::cos(ang);
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) return 0;
    // Reject the final partial block so every residue is equally likely.
    std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
        std::uint64_t x = gen_();
        if (x >= threshold) return x % bound;
    }
}

std::uint64_t Rng::deriveSeed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 finalizer over the combined words.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

} // namespace malt
