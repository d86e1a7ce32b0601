#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace qgraph {

/// Seeded stream of uniforms/phases/Gaussians on top of std::mt19937_64.
/// The uniform and Gaussian maps are hand-pinned (shift-scale, Box-Muller)
/// so that a (seed, stream) pair yields the same values on any platform.
class RandomStream {
  public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(stream),
                          static_cast<std::uint32_t>(stream >> 32)};
        engine_.seed(seq);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform on [0, 2*pi).
    double phase() { return 2.0 * std::numbers::pi * uniform01(); }

    /// Standard complex Gaussian (Box-Muller; variance 1 per component).
    std::complex<double> gaussian() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return {r * std::cos(2.0 * std::numbers::pi * u2),
                r * std::sin(2.0 * std::numbers::pi * u2)};
    }

  private:
    std::mt19937_64 engine_;
};

}  // namespace qgraph
