#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>

namespace imphy {

/// Seed/stream mixing function (splitmix64 step).
inline std::uint64_t splitmix64_next(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from (master, a, b). Streams derived
/// from distinct (a, b) pairs never collide in practice, so adding sweep
/// points or trials does not shift any other stream.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a,
                                 std::uint64_t b = 0) noexcept {
    std::uint64_t s = master;
    std::uint64_t h = splitmix64_next(s);
    s ^= a * 0x9e3779b97f4a7c15ULL;
    h ^= splitmix64_next(s);
    s ^= b * 0xd1b54a32d192ed03ULL;
    h ^= splitmix64_next(s);
    return h;
}

/// xoshiro256** generator with explicit Box-Muller Gaussians.
///
/// The standard-library distributions are implementation defined, so every
/// draw here is specified down to the bit: results are reproducible across
/// platforms and a generator is cheap enough to seed per Monte Carlo trial.
/// Not safe for concurrent use; give each worker its own instance.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) noexcept {
        for (auto& word : state_) word = splitmix64_next(seed);
    }

    std::uint64_t next_u64() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform in (0, 1]; never returns 0 so log() is always finite.
    double uniform01() noexcept {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    /// Single bit (for data generation).
    std::uint8_t bit() noexcept { return static_cast<std::uint8_t>(next_u64() >> 63); }

    /// Standard normal N(0, 1). Box-Muller; the antithetic partner is cached.
    double gaussian() noexcept {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform01()));
        const double phi = 2.0 * pi * uniform01();
        spare_ = r * std::sin(phi);
        have_spare_ = true;
        return r * std::cos(phi);
    }

    /// Circularly symmetric complex Gaussian CN(0, variance).
    std::complex<double> cgaussian(double variance = 1.0) noexcept {
        const double r = std::sqrt(-variance * std::log(uniform01()));
        const double phi = 2.0 * pi * uniform01();
        return {r * std::cos(phi), r * std::sin(phi)};
    }

  private:
    static constexpr double pi = 3.141592653589793238462643383279502884;

    static std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> state_{};
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace imphy
