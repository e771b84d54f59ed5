#pragma once

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <utility>

#include "popsize/agent.hpp"
#include "popsize/rng.hpp"
#include "popsize/sim.hpp"

namespace popsize {

/// Anything that hands out fair bits one at a time.
template <class B>
concept BitSource = requires(B& b) {
    { b.next_bit() } -> std::convertible_to<bool>;
};

/// Number of fair flips up to and including the first 1 (so >= 1, mean 2).
template <BitSource Bits>
std::uint32_t draw_geometric_half(Bits& bits)
{
    if constexpr (requires { { bits.geometric_half() } -> std::convertible_to<std::uint32_t>; }) {
        return bits.geometric_half();
    } else {
        std::uint32_t flips = 1;
        while (!bits.next_bit())
            ++flips;
        return flips;
    }
}

/// p-geometric sample, one Bernoulli(p) trial per draw. Throws InvalidParameter
/// unless 0 < p <= 1.
std::uint32_t sample_geometric(Rng& rng, double p);

/// Geometric variable built incrementally from synthetic coins: the value grows
/// while the owner is the sender and completes the first time it is the
/// receiver.
struct SyntheticGeometric {
    std::uint32_t value = 1;
    bool complete = false;

    /// Feeds one coin (true = receiver = heads). Returns true once complete.
    bool advance(bool heads)
    {
        if (complete)
            return true;
        if (heads)
            complete = true;
        else
            ++value;
        return complete;
    }
};

/// 1 when `agent` is the receiver of `record`, 0 when it is the sender.
/// Throws std::logic_error if the agent is not part of the interaction.
int synthetic_coin_bit(const InteractionRecord& record, std::uint32_t agent);

/// Both sides of an epidemic transition i, j -> max, max.
template <class T>
std::pair<T, T> epidemic_max(const T& x, const T& y)
{
    const T& m = std::max(x, y);
    return {m, m};
}

/// Per-agent phase clock: counts interactions against a threshold.
struct PhaseClockState {
    std::uint32_t time = 0;
    std::uint32_t threshold = 1;
    std::uint32_t epoch = 0;
};

struct PhaseTick {
    PhaseClockState state;
    bool fired = false;
};

/// Counts one interaction; `fired` is set once time has reached the threshold.
/// Resetting is up to the caller (see reset_phase).
PhaseTick phase_tick(PhaseClockState state);

/// time <- 0, epoch <- epoch + 1.
PhaseClockState reset_phase(PhaseClockState state);

/// Resets the downstream estimation state of an agent after its clk grew.
///
/// time, sum and epoch go to 0; protocol_done, updated_sum and any output are
/// cleared. Under A/S an A agent draws a fresh gr; under A/F gr returns to 1
/// and must be regenerated. role and clk are untouched.
template <BitSource Bits>
void restart(AgentState& agent, Bits& bits, Variant variant)
{
    agent.time = 0;
    agent.sum = 0;
    agent.epoch = 0;
    agent.protocol_done = false;
    agent.updated_sum = false;
    agent.output.reset();
    if (variant == Variant::as_randomized) {
        if (agent.role == Role::A)
            agent.gr = draw_geometric_half(bits);
    } else {
        agent.gr = 1;
        agent.gr_generated = false;
    }
}

} // namespace popsize
