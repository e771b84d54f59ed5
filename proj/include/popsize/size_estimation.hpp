#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "popsize/agent.hpp"
#include "popsize/primitives.hpp"
#include "popsize/rng.hpp"
#include "popsize/sim.hpp"

namespace popsize {

/// role=X, time=sum=epoch=0, gr=clk=1, all flags false, no output.
constexpr AgentState init_agent()
{
    return AgentState{};
}

/// sum/epochs + 1 as an exact fraction. Throws InvalidState when epochs == 0.
Rational compute_output(std::uint64_t sum, std::uint64_t epochs);

/// Side effects of one interaction that the runner accounts for.
struct InteractEffects {
    std::uint32_t restarts = 0;
};

namespace detail {

inline std::uint64_t epoch_threshold(const AgentState& a, const ProtocolParams& p)
{
    return static_cast<std::uint64_t>(p.cte) * a.clk;
}

inline std::uint64_t epoch_target(const AgentState& a, const ProtocolParams& p)
{
    return static_cast<std::uint64_t>(p.epoch_multiplier) * a.clk;
}

// time stops counting at twice the threshold.
inline void count_time(AgentState& a, const ProtocolParams& p)
{
    if (a.time < 2 * epoch_threshold(a, p))
        ++a.time;
}

template <BitSource Bits>
void move_to_next_gr(AgentState& a, Bits& bits)
{
    a.time = 0;
    a.gr = draw_geometric_half(bits);
    a.updated_sum = false;
}

// A/F: bank the current gr and start generating the next one.
inline void bank_gr(AgentState& a)
{
    a.sum += a.gr;
    a.time = 0;
    a.gr = 1;
    a.gr_generated = false;
}

template <BitSource Bits>
void timer_as(AgentState& a, Bits& bits, const ProtocolParams& p)
{
    if (a.time >= epoch_threshold(a, p) && a.updated_sum && !a.protocol_done) {
        ++a.epoch;
        move_to_next_gr(a, bits);
    }
    if (a.epoch >= epoch_target(a, p))
        a.protocol_done = true;
}

inline void timer_af(AgentState& a, const ProtocolParams& p)
{
    if (a.time >= epoch_threshold(a, p) && !a.protocol_done) {
        ++a.epoch;
        bank_gr(a);
    }
    if (a.epoch >= epoch_target(a, p) && !a.protocol_done) {
        a.protocol_done = true;
        a.output = compute_output(a.sum, a.epoch);
    }
}

// Larger clk wins; the adopter restarts. Returns the number of restarts (0/1).
template <BitSource Bits>
std::uint32_t propagate_clk(AgentState& x, AgentState& y, Bits& bits, Variant v)
{
    if (x.clk < y.clk) {
        x.clk = y.clk;
        restart(x, bits, v);
        return 1;
    }
    if (y.clk < x.clk) {
        y.clk = x.clk;
        restart(y, bits, v);
        return 1;
    }
    return 0;
}

inline void propagate_gr(AgentState& x, AgentState& y)
{
    if (x.epoch != y.epoch)
        return;
    if (x.gr < y.gr)
        x.gr = y.gr;
    else if (y.gr < x.gr)
        y.gr = x.gr;
}

// An S agent that reached the last epoch publishes sum/epoch + 1.
inline void finish_s(AgentState& s, const ProtocolParams& p)
{
    if (!s.protocol_done && s.epoch >= epoch_target(s, p)) {
        s.protocol_done = true;
        s.output = compute_output(s.sum, s.epoch);
    }
}

inline void share_output(AgentState& x, AgentState& y)
{
    if (x.output.has_value() == y.output.has_value() || x.role == Role::X || y.role == Role::X)
        return;
    if (x.output && !y.output) {
        y.output = x.output;
        y.protocol_done = true;
    } else if (y.output && !x.output) {
        x.output = y.output;
        x.protocol_done = true;
    }
}

template <BitSource Bits>
InteractEffects interact_as(AgentState& rec, AgentState& sen, Bits& bits, const ProtocolParams& p);

InteractEffects interact_af(AgentState& rec, AgentState& sen, const ProtocolParams& p);

} // namespace detail

/// Role assignment: X,X -> S,A; (X receiver, A sender) -> S; (X receiver,
/// S sender) -> A. New A agents under A/S draw clk = geometric + clk_offset.
/// Pairs without an X receiver are left alone.
template <BitSource Bits>
void partition_roles(AgentState& rec, AgentState& sen, Bits& bits, const ProtocolParams& params)
{
    if (rec.role != Role::X)
        return;
    const bool as = params.variant == Variant::as_randomized;
    const Role other = as ? Role::S : Role::F;
    if (sen.role == Role::X) {
        sen.role = Role::A;
        if (as)
            sen.clk = draw_geometric_half(bits) + params.clk_offset;
        rec.role = other;
    } else if (sen.role == Role::A) {
        rec.role = other;
    } else if (sen.role == other) {
        rec.role = Role::A;
        if (as)
            rec.clk = draw_geometric_half(bits) + params.clk_offset;
    }
}

/// One interaction of the size-estimation protocol.
///
/// A/S order: partition; A agents count time and check their timer; clk
/// propagation with restart; epoch propagation (A-A adopt and move on, S-S adopt
/// epoch and sum); A-S deposit; A-A gr propagation within an epoch; S agents
/// that reached epoch_multiplier*clk publish sum/epoch + 1; outputs spread.
/// The A/F variant takes its coins from the receiver/sender roles and ignores
/// `bits`.
template <BitSource Bits>
InteractEffects interact(AgentState& rec, AgentState& sen, Bits& bits, const ProtocolParams& params)
{
    if (params.variant == Variant::as_randomized)
        return detail::interact_as(rec, sen, bits, params);
    return detail::interact_af(rec, sen, params);
}

template <BitSource Bits>
InteractEffects detail::interact_as(AgentState& rec, AgentState& sen, Bits& bits, const ProtocolParams& params)
{
    // Local copy: agent stores cannot alias it, so its fields stay in registers.
    const ProtocolParams p = params;
    InteractEffects fx;
    if (rec.role == Role::X)
        partition_roles(rec, sen, bits, p);

    // Dispatch once on the role pair; each case runs the subprotocols that
    // apply to it, in protocol order.
    const auto pair = (static_cast<unsigned>(rec.role) << 2) | static_cast<unsigned>(sen.role);
    constexpr auto AA = (1u << 2) | 1u;
    constexpr auto AS = (1u << 2) | 2u;
    constexpr auto SA = (2u << 2) | 1u;
    constexpr auto SS = (2u << 2) | 2u;

    switch (pair) {
    case AA: {
        count_time(rec, p);
        timer_as(rec, bits, p);
        count_time(sen, p);
        timer_as(sen, bits, p);
        fx.restarts += propagate_clk(rec, sen, bits, p.variant);
        if (rec.epoch < sen.epoch) {
            rec.epoch = sen.epoch;
            move_to_next_gr(rec, bits);
        } else if (sen.epoch < rec.epoch) {
            sen.epoch = rec.epoch;
            move_to_next_gr(sen, bits);
        }
        propagate_gr(rec, sen);
        break;
    }
    case AS:
    case SA: {
        AgentState& a = pair == AS ? rec : sen;
        AgentState& s = pair == AS ? sen : rec;
        count_time(a, p);
        timer_as(a, bits, p);
        fx.restarts += propagate_clk(rec, sen, bits, p.variant);
        if (a.epoch == s.epoch && a.time >= epoch_threshold(a, p) && !a.protocol_done) {
            ++s.epoch;
            s.sum += a.gr;
            a.updated_sum = true;
        } else if (a.epoch < s.epoch) {
            a.updated_sum = true;
        }
        finish_s(s, p);
        break;
    }
    case SS: {
        fx.restarts += propagate_clk(rec, sen, bits, p.variant);
        if (rec.epoch < sen.epoch) {
            rec.epoch = sen.epoch;
            rec.sum = sen.sum;
        } else if (sen.epoch < rec.epoch) {
            sen.epoch = rec.epoch;
            sen.sum = rec.sum;
        }
        finish_s(rec, p);
        finish_s(sen, p);
        break;
    }
    default:
        // At least one X agent: only A agents' clocks advance.
        if (rec.role == Role::A) {
            count_time(rec, p);
            timer_as(rec, bits, p);
        }
        if (sen.role == Role::A) {
            count_time(sen, p);
            timer_as(sen, bits, p);
        }
        return fx;
    }
    share_output(rec, sen);
    return fx;
}

/// Every agent done with an output, and every clk-carrying agent holds the
/// population maximum clk (A/F: every A agent has also finished generating
/// clk). Nothing can change any output after this point.
bool is_stable(const std::vector<AgentState>& agents, Variant variant);

/// is_stable and all outputs equal.
bool is_converged(const std::vector<AgentState>& agents, Variant variant);

inline bool is_converged(const Population<AgentState>& pop, Variant variant)
{
    return is_converged(pop.agents(), variant);
}

struct FieldRanges {
    std::uint32_t clk = 0;
    std::uint32_t gr = 0;      // over A agents only
    std::uint32_t time = 0;
    std::uint32_t epoch = 0;
    std::uint32_t sum = 0;

    void observe(const AgentState& a)
    {
        clk = std::max(clk, a.clk);
        // Branch-free: A and S agents alternate unpredictably.
        const std::uint32_t g = a.role == Role::A ? a.gr : 0u;
        gr = std::max(gr, g);
        time = std::max(time, a.time);
        epoch = std::max(epoch, a.epoch);
        sum = std::max(sum, a.sum);
    }
};

struct RunResult {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    bool stable = false;
    double convergence_parallel_time = 0.0;  // time of the check that found convergence
    std::uint64_t interactions = 0;
    std::vector<std::optional<Rational>> outputs;
    std::optional<Rational> output;           // common output when converged
    double error = 0.0;                       // max_i |output_i - log2 n|, infinity if any is missing
    std::uint64_t restart_count = 0;
    FieldRanges field_ranges;
    std::uint32_t final_clk = 0;              // population max clk at the end
    std::size_t role_count_a = 0;
    std::size_t role_count_other = 0;         // S or F
};

struct EstimationOptions {
    std::uint64_t max_interactions = 0;  // 0 means default_budget(n)
    std::uint64_t snapshot_every = 0;    // 0 means n
    Trace* trace = nullptr;
};

/// Runs the size-estimation protocol on n fresh agents until is_stable holds
/// (checked at the snapshot cadence) or the budget runs out.
RunResult run_size_estimation(std::size_t n, const ProtocolParams& params, std::uint64_t seed,
                              const EstimationOptions& opts = {});

/// Snapshot recorder for size-estimation populations (fields clk, gr, time,
/// epoch, sum).
void record_estimation_snapshot(const Population<AgentState>& pop, Trace& trace);

/// Field-range limits from the state-space table, for population size n.
struct RangeLimits {
    double clk, gr, time, epoch, sum;
};
RangeLimits space_table_limits(std::size_t n);

struct RunMetrics {
    double error = 0.0;
    std::optional<double> output_value;
    std::optional<std::int64_t> output_rounded;
    double convergence_parallel_time = 0.0;
    std::uint64_t restarts = 0;
    FieldRanges ranges;
    bool clk_in_table = false;
    bool gr_in_table = false;
    bool time_in_table = false;
    bool epoch_in_table = false;
    bool sum_in_table = false;
};

RunMetrics measure_run(const RunResult& result, std::size_t n);

} // namespace popsize
