#ifndef PHEFL_RNG_HPP
#define PHEFL_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>
#include <vector>

namespace phefl {

/// splitmix64 finalizer; bijective on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Collision-resistant seed stream derivation: hashes the master seed, a role
/// string and any number of indices into one 64-bit seed. Pure integer math,
/// so the result is identical on every platform.
std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                          std::initializer_list<std::uint64_t> indices = {});

/// Deterministic random source. All draws are hand-specified on top of the
/// (standard-mandated) mt19937_64 output stream; none of the distributions go
/// through implementation-defined std:: adapters, so sequences are bit-stable
/// across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0,1) with 53 random bits.
    double next_double01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) {
        return lo + (hi - lo) * next_double01();
    }

    /// Uniform integer in [0, bound) by rejection; bound > 0.
    std::uint64_t next_below(std::uint64_t bound);

    /// Standard normal via Box-Muller (pairs cached).
    double next_gaussian();

    /// Fisher-Yates with draws from next_below.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(next_below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_gaussian_ = 0.0;
    bool has_cached_gaussian_ = false;
};

} // namespace phefl

#endif
