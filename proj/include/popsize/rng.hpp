#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <utility>

namespace popsize {

/// Portable xoshiro256** generator seeded through splitmix64.
///
/// Streams depend only on the 64-bit seed, so acceptance numbers are
/// reproducible across compilers and platforms. Besides raw 64-bit words
/// it hands out fair bits one at a time from a 64-bit buffer; geometric
/// draws read from the same buffer, so a geometric sample consumes exactly
/// the bits a flip-by-flip loop would.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0) { reseed(seed); }

    void reseed(std::uint64_t seed);

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64()
    {
        const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = std::rotl(s_[3], 45);
        return result;
    }

    // UniformRandomBitGenerator interface, so <random> distributions work too.
    std::uint64_t operator()() { return next_u64(); }
    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return ~std::uint64_t{0}; }

    /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection.
    std::uint64_t uniform(std::uint64_t bound);

    /// Two independent uniforms in [0, a) and [0, b), both < 2^32, taken from
    /// the two halves of one 64-bit word (each half redrawn on rejection).
    std::pair<std::uint32_t, std::uint32_t> uniform_pair32(std::uint32_t a, std::uint32_t b)
    {
        const std::uint64_t word = next_u64();
        return {bounded32(static_cast<std::uint32_t>(word >> 32), a),
                bounded32(static_cast<std::uint32_t>(word), b)};
    }

    /// Uniform real in [0, 1) with 53 random bits.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool next_bit()
    {
        if (bits_left_ == 0) {
            bit_buffer_ = next_u64();
            bits_left_ = 64;
        }
        const bool b = bit_buffer_ & 1u;
        bit_buffer_ >>= 1;
        --bits_left_;
        return b;
    }

    /// Flips fair bits until the first 1 and returns the number of flips.
    std::uint32_t geometric_half()
    {
        std::uint32_t flips = 0;
        for (;;) {
            if (bits_left_ == 0) {
                bit_buffer_ = next_u64();
                bits_left_ = 64;
            }
            if (bit_buffer_ == 0) {
                flips += bits_left_;
                bits_left_ = 0;
                continue;
            }
            const int zeros = std::countr_zero(bit_buffer_);
            if (zeros >= bits_left_) {
                flips += bits_left_;
                bits_left_ = 0;
                continue;
            }
            flips += static_cast<std::uint32_t>(zeros) + 1;
            bit_buffer_ = (zeros == 63) ? 0 : (bit_buffer_ >> (zeros + 1));
            bits_left_ -= zeros + 1;
            return flips;
        }
    }

    friend bool operator==(const Rng&, const Rng&) = default;

private:
    std::uint32_t bounded32(std::uint32_t x, std::uint32_t bound)
    {
        std::uint64_t m = static_cast<std::uint64_t>(x) * bound;
        auto low = static_cast<std::uint32_t>(m);
        if (low < bound) {
            const std::uint32_t threshold = (0u - bound) % bound;
            while (low < threshold) {
                m = static_cast<std::uint64_t>(static_cast<std::uint32_t>(next_u64() >> 32)) * bound;
                low = static_cast<std::uint32_t>(m);
            }
        }
        return static_cast<std::uint32_t>(m >> 32);
    }

    std::uint64_t seed_ = 0;
    std::array<std::uint64_t, 4> s_{};
    std::uint64_t bit_buffer_ = 0;
    int bits_left_ = 0;
};

Rng seeded_rng(std::uint64_t seed);

/// splitmix64 step; also used to derive independent per-trial seeds.
std::uint64_t splitmix64(std::uint64_t& state);

} // namespace popsize
