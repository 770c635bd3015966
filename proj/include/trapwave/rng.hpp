#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "trapwave/types.hpp"

namespace trapwave {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z)
{
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/*!
 * Counter-based generator: draw k of stream s under seed is a pure function
 * of (seed, s, k). Every Monte-Carlo sample owns its own stream, so results do
 * not depend on how samples are distributed across threads.
 */
class CounterRng {
  public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(mix64(seed) ^ (stream * 0xD1B54A32D192ED03ull)))
    {}

    std::uint64_t next_u64() { return mix64(key_ ^ mix64(counter_++)); }

    //! Uniform in [0, 1) with 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

inline Vec3 uniform_on_sphere(CounterRng& rng)
{
    const double z = 2.0 * rng.uniform() - 1.0;
    const double phi = 2.0 * std::numbers::pi * rng.uniform();
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {s * std::cos(phi), s * std::sin(phi), z};
}

inline Vec3 uniform_in_ball(CounterRng& rng, const Vec3& center, double radius)
{
    const Vec3 dir = uniform_on_sphere(rng);
    return center + radius * std::cbrt(rng.uniform()) * dir;
}

//! Point i of an n-point Fibonacci lattice on the unit sphere.
inline Vec3 fibonacci_sphere(std::size_t i, std::size_t n)
{
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    return {s * std::cos(phi), s * std::sin(phi), z};
}

}  // namespace trapwave
