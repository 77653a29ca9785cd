#ifndef EGN_RNG_HPP
#define EGN_RNG_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace egn {

/// Deterministic random source.
///
/// mt19937_64 is bit-exact across standard library implementations, but the
/// std::*_distribution adapters are not, so the uniform/gaussian mappings are
/// done here by hand. Every sampled stream in the library flows from a root
/// seed through child() labels, which keeps runs bitwise reproducible.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    /// Uniform double in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = uniform(-1.0, 1.0);
            v = uniform(-1.0, 1.0);
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double m = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * m;
        have_spare_ = true;
        return u * m;
    }

    /// Uniform integer in [0, n), n > 0. Rejection sampling, no modulo bias.
    std::uint64_t uniform_index(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Derives an independent child seed from this rng's seed and a label.
    std::uint64_t child(std::string_view label) const {
        std::uint64_t h = 1469598103934665603ull; // FNV-1a offset basis
        for (char c : label) {
            h ^= static_cast<std::uint8_t>(c);
            h *= 1099511628211ull;
        }
        return splitmix(seed_ ^ h);
    }

    /// Rng seeded with child(label).
    Rng child_rng(std::string_view label) const { return Rng(child(label)); }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace egn

#endif // EGN_RNG_HPP
