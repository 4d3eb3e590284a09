#pragma once

#include <cmath>
#include <cstdint>

// Per-path random streams: a xoshiro256++ generator whose state is derived
// from (seed, stream_id) through splitmix64, so any path of an ensemble can
// be reproduced in isolation and results do not depend on scheduling.
// Gaussians come from a Doornik-style ziggurat over 128 layers.

namespace selfdiff {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

class PathRng {
  public:
    PathRng() : PathRng(0, 0) {}

    PathRng(std::uint64_t seed, std::uint64_t stream_id) {
        std::uint64_t sm = seed + 0x9E3779B97F4A7C15ULL * (stream_id + 1);
        for (auto& w : s_) w = splitmix64(sm);
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on the open interval (0,1).
    double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() {
        for (;;) {
            const std::uint64_t bits = next_u64();
            const double u = 2.0 * ((static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53) - 1.0;
            const int i = static_cast<int>(bits & 127u);
            const Zig& z = zig();
            if (std::fabs(u) < z.ratio[i]) return u * z.x[i];
            if (i == 0) return tail(u < 0.0);
            const double xx = u * z.x[i];
            const double f0 = std::exp(-0.5 * (z.x[i] * z.x[i] - xx * xx));
            const double f1 = std::exp(-0.5 * (z.x[i + 1] * z.x[i + 1] - xx * xx));
            if (f1 + uniform() * (f0 - f1) < 1.0) return xx;
        }
    }

  private:
    static constexpr int kLayers = 128;
    static constexpr double kR = 3.442619855899;
    static constexpr double kV = 9.91256303526217e-3;

    struct Zig {
        double x[kLayers + 1];
        double ratio[kLayers];
        Zig() {
            double f = std::exp(-0.5 * kR * kR);
            x[0] = kV / f;
            x[1] = kR;
            x[kLayers] = 0.0;
            for (int i = 2; i < kLayers; ++i) {
                x[i] = std::sqrt(-2.0 * std::log(kV / x[i - 1] + std::exp(-0.5 * x[i - 1] * x[i - 1])));
            }
            for (int i = 0; i < kLayers; ++i) ratio[i] = x[i + 1] / x[i];
        }
    };

    static const Zig& zig() {
        static const Zig z;
        return z;
    }

    double tail(bool negative) {
        double x, y;
        do {
            x = std::log(uniform()) / kR;
            y = std::log(uniform());
        } while (-2.0 * y < x * x);
        return negative ? x - kR : kR - x;
    }

    static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

    std::uint64_t s_[4];
};

}  // namespace selfdiff
