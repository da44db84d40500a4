#pragma once
#include <cmath>
#include <cstdint>

namespace volcorr {

// Philox4x32-10 counter-based block cipher. The block function is stateless:
// (key, counter) fully determines the output, so any (seed, stream, block)
// coordinate can be generated independently of call order or thread layout.
struct Philox4x32 {
    static constexpr uint32_t kMul0 = 0xD2511F53u;
    static constexpr uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr uint32_t kWeyl1 = 0xBB67AE85u;

    // In-place 10-round bijection of the 128-bit counter under a 64-bit key.
    static void encrypt(uint32_t x[4], uint32_t k0, uint32_t k1) {
        for (int r = 0; r < 10; ++r) {
            uint64_t p0 = static_cast<uint64_t>(kMul0) * x[0];
            uint64_t p1 = static_cast<uint64_t>(kMul1) * x[2];
            uint32_t hi0 = static_cast<uint32_t>(p0 >> 32);
            uint32_t lo0 = static_cast<uint32_t>(p0);
            uint32_t hi1 = static_cast<uint32_t>(p1 >> 32);
            uint32_t lo1 = static_cast<uint32_t>(p1);
            uint32_t n0 = hi1 ^ x[1] ^ k0;
            uint32_t n2 = hi0 ^ x[3] ^ k1;
            x[0] = n0;
            x[1] = lo1;
            x[2] = n2;
            x[3] = lo0;
            k0 += kWeyl0;
            k1 += kWeyl1;
        }
    }
};

// One logical stream of a seeded generator: the stream id occupies the high
// counter words, the running block index the low ones.
class CounterStream {
public:
    CounterStream(uint64_t seed, uint64_t stream) : seed_(seed), stream_(stream) {}

    // 128 fresh bits as two 64-bit words.
    void next_block(uint64_t& a, uint64_t& b) {
        uint32_t x[4] = {static_cast<uint32_t>(block_), static_cast<uint32_t>(block_ >> 32),
                         static_cast<uint32_t>(stream_), static_cast<uint32_t>(stream_ >> 32)};
        Philox4x32::encrypt(x, static_cast<uint32_t>(seed_),
                            static_cast<uint32_t>(seed_ >> 32));
        ++block_;
        a = (static_cast<uint64_t>(x[1]) << 32) | x[0];
        b = (static_cast<uint64_t>(x[3]) << 32) | x[2];
    }

    // Two uniforms in the open interval (0, 1), 53-bit resolution.
    void next_uniform2(double& u1, double& u2) {
        uint64_t a, b;
        next_block(a, b);
        u1 = static_cast<double>(a >> 11) * 0x1.0p-53 + 0x1.0p-54;
        u2 = static_cast<double>(b >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    // Two independent standard normals (Box-Muller).
    void next_normal2(double& z1, double& z2) {
        double u1, u2;
        next_uniform2(u1, u2);
        double r = std::sqrt(-2.0 * std::log(u1));
        double t = 6.28318530717958647692 * u2;
        z1 = r * std::cos(t);
        z2 = r * std::sin(t);
    }

private:
    uint64_t seed_;
    uint64_t stream_;
    uint64_t block_ = 0;
};

}  // namespace volcorr
