#include "ssem/rng.hpp"

#include <cmath>

#include <boost/math/special_functions/erf.hpp>

namespace ssem {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    std::uint64_t z = (x += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

}  // namespace

Xoshiro256::Xoshiro256(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t x = seed + stream * 0xD1B54A32D192ED03ULL;
    for (auto& word : s_) word = splitmix64(x);
}

std::uint64_t Xoshiro256::next() noexcept {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Xoshiro256::uniform() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
}

double standard_normal_quantile(double u) {
    // Phi^{-1}(u) = -sqrt(2) * erfc^{-1}(2u)
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

}  // namespace ssem
