#include "popsize/rng.hpp"

namespace popsize {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

void Rng::reseed(std::uint64_t seed)
{
    seed_ = seed;
    std::uint64_t sm = seed;
    for (auto& word : s_)
        word = splitmix64(sm);
    bit_buffer_ = 0;
    bits_left_ = 0;
}

std::uint64_t Rng::uniform(std::uint64_t bound)
{
    if (bound <= 1)
        return 0;
    __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<__uint128_t>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

Rng seeded_rng(std::uint64_t seed)
{
    return Rng(seed);
}

} // namespace popsize
