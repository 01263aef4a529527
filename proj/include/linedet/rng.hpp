#pragma once

#include <cmath>
#include <cstdint>

namespace linedet {

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}
}  // namespace detail

/// n-th output of the splitmix64 stream with the given seed. Counter-based:
/// any draw can be evaluated independently of the others, so seeded
/// generation is order-independent and safe to parallelize.
inline std::uint64_t splitmix_at(std::uint64_t seed, std::uint64_t n) {
    return detail::mix64(seed + 0x9e3779b97f4a7c15ull * (n + 1));
}

/// Derives an independent child seed (per image, per frame, per channel...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return detail::mix64(splitmix_at(seed, tag) ^ 0xd1b54a32d192ed03ull);
}

/// Stateful convenience wrapper over the counter-based stream.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed) {}

    std::uint64_t next_u64() { return splitmix_at(seed_, counter_++); }

    /// Uniform in [0, 1).
    double unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in (0, 1]; never zero, usable under a logarithm.
    double unit_pos() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n); n must be positive.
    std::uint64_t below(std::uint64_t n) {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

    /// Standard normal via Box-Muller; consumes two draws per call.
    double gaussian() {
        const double u1 = unit_pos();
        const double u2 = unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    bool chance(double p) { return unit() < p; }

    Rng fork(std::uint64_t tag) const { return Rng(derive_seed(seed_, tag)); }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace linedet
