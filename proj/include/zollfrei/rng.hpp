#pragma once
#include <cstdint>
#include <random>

#include "zollfrei/quaternion.hpp"
#include "zollfrei/vec.hpp"

namespace zollfrei {

/// Seeded generator with explicit Box-Muller so that sampled sequences are
/// reproducible across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0,1)
        return (gen_() >> 11) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 1e-300) u1 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * 3.14159265358979323846 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    Vec3 gaussian_vec3() { return {gaussian(), gaussian(), gaussian()}; }

    Quat unit_quaternion() {
        Quat q{gaussian(), gaussian(), gaussian(), gaussian()};
        while (norm(q) < 1e-6) q = {gaussian(), gaussian(), gaussian(), gaussian()};
        return normalized(q);
    }

private:
    std::mt19937_64 gen_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace zollfrei
