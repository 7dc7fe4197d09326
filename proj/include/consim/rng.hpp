#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace consim {

// Seedable stream of standard normal draws.
//
// The algorithm is fixed so a seed fully determines the stream: uniforms
// come from std::mt19937_64 (bit-exact by the C++ standard) mapped to
// [0,1) as (x >> 11) * 2^-53, and normals are produced in pairs by the
// Box-Muller transform
//   z0 = sqrt(-2 ln(1-u1)) cos(2 pi u2)
//   z1 = sqrt(-2 ln(1-u1)) sin(2 pi u2)
// with the second value cached for the next call.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

    double next() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = next_uniform();
        const double u2 = next_uniform();
        const double radius = std::sqrt(-2.0 * std::log1p(-u1));
        const double angle = 2.0 * pi * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

    // Uniform draw on [0,1) using the top 53 bits of the engine output.
    double next_uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

private:
    static constexpr double pi = 3.14159265358979323846;

    std::mt19937_64 engine_;
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace consim
