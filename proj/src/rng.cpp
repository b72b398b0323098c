#include "phefl/rng.hpp"

#include <cmath>
#include <numbers>

namespace phefl {

namespace {

// FNV-1a over one byte.
constexpr std::uint64_t fnv_step(std::uint64_t h, unsigned char byte) {
    return (h ^ byte) * 0x100000001b3ULL;
}

constexpr std::uint64_t fnv_u64(std::uint64_t h, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h = fnv_step(h, static_cast<unsigned char>(v >> (8 * i)));
    }
    return h;
}

} // namespace

std::uint64_t derive_seed(std::uint64_t master, std::string_view role,
                          std::initializer_list<std::uint64_t> indices) {
    std::uint64_t h = 0xcbf29ce484222325ULL; // FNV offset basis
    h = fnv_u64(h, master);
    for (char c : role) {
        h = fnv_step(h, static_cast<unsigned char>(c));
    }
    h = fnv_step(h, 0xff); // separator between role and indices
    for (std::uint64_t idx : indices) {
        h = fnv_u64(h, idx);
    }
    return mix64(h);
}

std::uint64_t Rng::next_below(std::uint64_t bound) {
    // Rejection sampling over the top range to avoid modulo bias.
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % bound;
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % bound;
}

double Rng::next_gaussian() {
    if (has_cached_gaussian_) {
        has_cached_gaussian_ = false;
        return cached_gaussian_;
    }
    double u1 = next_double01();
    if (u1 <= 0.0) {
        u1 = 0x1.0p-53;
    }
    const double u2 = next_double01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    cached_gaussian_ = r * std::sin(theta);
    has_cached_gaussian_ = true;
    return r * std::cos(theta);
}

} // namespace phefl
