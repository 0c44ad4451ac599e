#ifndef WAVESEP_RNG_HPP
#define WAVESEP_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>

namespace wavesep {

// std::mt19937_64 raw output is fully specified by the standard; the
// distributions are not. All sampling goes through the helpers below so
// sequences are reproducible across compilers and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). Rejection sampling keeps it unbiased.
    uint64_t below(uint64_t n) {
        if (n == 0) return 0;
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Box-Muller; one value per call keeps the stream layout simple.
    double gaussian() {
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

private:
    std::mt19937_64 engine_;
};

// splitmix64 finalizer, used to derive independent stream seeds from a
// base seed plus position words (epoch, step, batch index, ...).
inline uint64_t mix_seed(uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline uint64_t derive_seed(uint64_t base, uint64_t a, uint64_t b = 0, uint64_t c = 0) {
    uint64_t s = mix_seed(base);
    s = mix_seed(s ^ a);
    s = mix_seed(s ^ b);
    s = mix_seed(s ^ c);
    return s;
}

} // namespace wavesep

#endif
