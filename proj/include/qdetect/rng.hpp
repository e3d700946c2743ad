#pragma once

#include <array>
#include <cstdint>

#include <boost/random/normal_distribution.hpp>

namespace qdetect {

// Philox4x32-10 block function.
inline std::array<uint32_t, 4> philox4x32(std::array<uint32_t, 4> ctr, std::array<uint32_t, 2> key) {
    constexpr uint64_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
    constexpr uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
    uint32_t c0 = ctr[0], c1 = ctr[1], c2 = ctr[2], c3 = ctr[3], k0 = key[0], k1 = key[1];
    for (int r = 0; r < 10; ++r) {
        const uint64_t p0 = M0 * c0, p1 = M1 * c2;
        const uint32_t n0 = uint32_t(p1 >> 32) ^ c1 ^ k0, n2 = uint32_t(p0 >> 32) ^ c3 ^ k1;
        c1 = uint32_t(p1);
        c3 = uint32_t(p0);
        c0 = n0;
        c2 = n2;
        k0 += W0;
        k1 += W1;
    }
    return {c0, c1, c2, c3};
}

// Counter-based engine keyed by (seed, stream). Output word k of a stream (64 bits, two per block) is
// a pure function of (seed, stream, k), so results never depend on how paths
// are distributed over threads.
class PhiloxEngine {
public:
    using result_type = uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~uint64_t(0); }

    PhiloxEngine(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    result_type operator()() {
        if (pos_ == 2) refill();
        return buf_[pos_++];
    }

    std::array<uint32_t, 4> block(uint64_t index) const {
        return philox4x32({uint32_t(index), uint32_t(index >> 32), uint32_t(stream_), uint32_t(stream_ >> 32)},
                          {uint32_t(seed_), uint32_t(seed_ >> 32)});
    }

    uint64_t seed() const { return seed_; }
    uint64_t stream() const { return stream_; }

private:
    [[gnu::noinline]] void refill() {
        const auto r = block(ctr_++);
        buf_[0] = (uint64_t(r[0]) << 32) | r[1];
        buf_[1] = (uint64_t(r[2]) << 32) | r[3];
        pos_ = 0;
    }

    uint64_t seed_, stream_;
    uint64_t ctr_ = 0;
    uint64_t buf_[2]{};
    int pos_ = 2;
};

class RngStream {
public:
    RngStream(uint64_t seed, uint64_t stream) : eng_(seed, stream) {}

    // random access: two uniforms in (0,1) / two normals (Box-Muller) from block `index`
    void uniforms_at(uint64_t index, double& u1, double& u2) const;
    void normals_at(uint64_t index, double& z1, double& z2) const;

    // sequential draws (ziggurat normals)
    double uniform();
    double normal() { return nd_(eng_); }

    uint64_t seed() const { return eng_.seed(); }
    uint64_t stream() const { return eng_.stream(); }

private:
    PhiloxEngine eng_;
    boost::random::normal_distribution<double> nd_;
};

// Stream ids: path index in the high bits, purpose tag in the low byte.
enum class StreamTag : uint64_t {
    Coord1 = 1,
    Coord2 = 2,
    Bridge1 = 3,
    Bridge2 = 4,
    Scenario = 5,
    Observation1 = 6,
    Observation2 = 7,
    ObsBridge1 = 8,
    ObsBridge2 = 9,
    Euler = 10,
    Misc = 11
};

inline uint64_t stream_id(uint64_t index, StreamTag tag) { return (index << 8) | static_cast<uint64_t>(tag); }

}  // namespace qdetect
