#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace chirl {

/// Deterministic random source. std::mt19937_64 output is pinned by the
/// standard, but the distribution adaptors are not, so the few draws we need
/// are implemented by hand to keep runs reproducible across toolchains.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        // 53 random mantissa bits, same construction as generate_canonical
        // would like to be but guaranteed stable.
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n).
    int uniform_int(int n) {
        if (n <= 0) throw std::invalid_argument("Rng::uniform_int: n must be positive");
        // rejection sampling to avoid modulo bias
        uint64_t un = static_cast<uint64_t>(n);
        uint64_t limit = UINT64_MAX - UINT64_MAX % un;
        uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return static_cast<int>(x % un);
    }

    /// Sample an index from an unnormalized weight vector by CDF inversion.
    int categorical(const std::vector<double>& w) {
        double total = 0.0;
        for (double x : w) {
            if (x < 0.0) throw std::invalid_argument("Rng::categorical: negative weight");
            total += x;
        }
        if (total <= 0.0) throw std::invalid_argument("Rng::categorical: zero total weight");
        double u = uniform() * total;
        double acc = 0.0;
        for (size_t i = 0; i < w.size(); ++i) {
            acc += w[i];
            if (u < acc) return static_cast<int>(i);
        }
        return static_cast<int>(w.size()) - 1;  // rounding fell past the end
    }

    uint64_t raw() { return engine_(); }

    /// splitmix64-style combiner; used to derive per-trajectory or per-cell
    /// seeds from a master seed without coupling draw order.
    static uint64_t mix(uint64_t a, uint64_t b) {
        uint64_t z = a ^ (b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace chirl
