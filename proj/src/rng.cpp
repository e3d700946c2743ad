#include "qdetect/rng.hpp"

#include <cmath>
#include <numbers>

namespace qdetect {

namespace {
constexpr double kScale = 1.0 / 9007199254740992.0;  // 2^-53
inline double to_unit(uint32_t hi, uint32_t lo) {
    return (double(((uint64_t(hi) << 32) | lo) >> 11) + 0.5) * kScale;
}
}  // namespace

void RngStream::uniforms_at(uint64_t index, double& u1, double& u2) const {
    auto r = eng_.block(index);
    u1 = to_unit(r[0], r[1]);
    u2 = to_unit(r[2], r[3]);
}

void RngStream::normals_at(uint64_t index, double& z1, double& z2) const {
    double u1, u2;
    uniforms_at(index, u1, u2);
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 2.0 * std::numbers::pi * u2;
    z1 = r * std::cos(th);
    z2 = r * std::sin(th);
}

double RngStream::uniform() {
    return (double(eng_() >> 11) + 0.5) * kScale;
}

}  // namespace qdetect
