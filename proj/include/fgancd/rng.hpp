#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace fgancd {

// splitmix64 finalizer; used for seed mixing so derived streams are
// decorrelated from their parent and from each other.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
    return splitmix64(splitmix64(base ^ splitmix64(a)) ^ splitmix64(b + 0x51ed270b9f3defa9ULL));
}

// Deterministic random source. std::mt19937_64 has a standardized bit
// stream; the distributions below are hand-rolled because the standard
// library's are implementation-defined and would break run-to-run
// reproducibility across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller; two uniforms per draw, no cached state.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    // Gumbel(0,1) as -log(-log(u)) with u clamped away from {0, 1}.
    double gumbel() {
        const double u = std::clamp(uniform(), 1e-12, 1.0 - 1e-12);
        return -std::log(-std::log(u));
    }

    // Value in the interval [0.5, 2] with a random sign.
    double signed_uniform(double lo, double hi) {
        const double sign = uniform() < 0.5 ? -1.0 : 1.0;
        return sign * uniform(lo, hi);
    }

    // Independent stream derived from the construction seed; unaffected by
    // how much of this stream has been consumed.
    Rng derive(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

    std::uint64_t seed() const { return seed_; }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace fgancd
