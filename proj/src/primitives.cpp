#include "popsize/primitives.hpp"

#include <sstream>
#include <stdexcept>
#include <string>

namespace popsize {

const char* role_name(Role r)
{
    switch (r) {
    case Role::X: return "X";
    case Role::A: return "A";
    case Role::S: return "S";
    case Role::F: return "F";
    }
    return "?";
}

const char* variant_name(Variant v)
{
    return v == Variant::as_randomized ? "as" : "af";
}

std::string describe(const AgentState& a)
{
    std::ostringstream os;
    os << role_name(a.role) << "{clk=" << a.clk << " gr=" << a.gr << " time=" << a.time << " epoch=" << a.epoch
       << " sum=" << a.sum << " upd=" << a.updated_sum << " lsg=" << a.log_size_generated
       << " grg=" << a.gr_generated << " done=" << a.protocol_done;
    if (a.output)
        os << " out=" << a.output->num << "/" << a.output->den;
    os << "}";
    return os.str();
}

std::uint32_t sample_geometric(Rng& rng, double p)
{
    if (!(p > 0.0 && p <= 1.0))
        throw InvalidParameter("geometric success probability must lie in (0, 1], got " + std::to_string(p));
    if (p == 0.5)
        return rng.geometric_half();
    std::uint32_t flips = 1;
    while (!(rng.uniform01() < p))
        ++flips;
    return flips;
}

int synthetic_coin_bit(const InteractionRecord& record, std::uint32_t agent)
{
    if (agent == record.receiver)
        return 1;
    if (agent == record.sender)
        return 0;
    throw std::logic_error("agent " + std::to_string(agent) + " is not part of interaction " +
                           std::to_string(record.interaction_number));
}

PhaseTick phase_tick(PhaseClockState state)
{
    if (state.time < state.threshold)
        ++state.time;
    return {state, state.time >= state.threshold};
}

PhaseClockState reset_phase(PhaseClockState state)
{
    state.time = 0;
    ++state.epoch;
    return state;
}

} // namespace popsize
