#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace folia {

// Deterministic Gaussian stream used for every random draw in the library.
//
// The pipeline is pinned so a given 64-bit seed reproduces the same values
// on any platform:
//   1. std::mt19937_64 seeded directly with the 64-bit seed (the engine's
//      output sequence is fixed by the C++ standard),
//   2. uniform doubles in [0, 1) taken as (x >> 11) * 2^-53,
//   3. standard normals via the Marsaglia polar method (only sqrt and log,
//      no trigonometry), consuming uniform pairs until the accept step.
//
// std::normal_distribution is deliberately not used: its algorithm is
// implementation-defined and differs across standard libraries.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    // Uniform double in [0, 1), 53 random mantissa bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal N(0, 1).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double scale = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * scale;
        have_spare_ = true;
        return u * scale;
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace folia
