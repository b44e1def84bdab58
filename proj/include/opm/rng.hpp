#ifndef OPM_RNG_HPP
#define OPM_RNG_HPP

#include <cmath>
#include <cstdint>

namespace opm {

// All randomness in the project flows through this splitmix64 stream. The
// standard library distributions are implementation-defined, so seeded
// draws would not reproduce across toolchains; this generator is pinned.
inline constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from (seed, tag). Chain calls to mix
// in more coordinates; the result is order-sensitive by design.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed + kGolden * (tag + 1));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGolden;
        return mix64(state_);
    }

    // Uniform on [0, 1).
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer on [0, n); n must be > 0. Uses rejection to stay
    // unbiased for arbitrary n (powers of two never reject).
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Standard normal via Box-Muller; caches the second deviate.
    double next_gaussian() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        const double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; // (0, 1]
        const double u2 = next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

private:
    std::uint64_t state_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace opm

#endif
