#pragma once

#include <array>
#include <cstdint>

namespace ssem {

/// xoshiro256** 1.0 (Blackman & Vigna), the generator behind every dataset.
///
/// Stream derivation (part of the reproducibility contract):
///   x0 = seed + stream * 0xD1B54A32D192ED03  (mod 2^64)
///   s[0..3] = four successive splitmix64 outputs starting from x0.
/// Streams used by sampling: 0 = labels, 1 = labeled y, 2 = unlabeled draws.
class Xoshiro256 {
public:
    static constexpr const char* kAlgorithm = "xoshiro256**-1.0/splitmix64";

    Xoshiro256(std::uint64_t seed, std::uint64_t stream) noexcept;

    std::uint64_t next() noexcept;

    /// Uniform on the open interval (0, 1): ((next() >> 11) + 0.5) * 2^-53.
    double uniform() noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
};

/// Inverse of the standard normal CDF, u in (0, 1).
double standard_normal_quantile(double u);

}  // namespace ssem
