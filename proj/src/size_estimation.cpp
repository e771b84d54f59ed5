#include "popsize/size_estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace popsize {

namespace {

// A/F never draws from an explicit source.
struct NoBits {
    bool next_bit() { throw std::logic_error("A/F variant must not consume explicit random bits"); }
};

bool tracks_clk(const AgentState& a, Variant v)
{
    if (v == Variant::as_randomized)
        return a.role != Role::X;
    return a.role == Role::A;
}

} // namespace

Rational compute_output(std::uint64_t sum, std::uint64_t epochs)
{
    if (epochs == 0)
        throw InvalidState("output requested with zero epochs");
    if (sum + epochs > 0xFFFFFFFFull)
        throw InvalidState("output fraction overflows 32 bits");
    return Rational{static_cast<std::uint32_t>(sum + epochs), static_cast<std::uint32_t>(epochs)};
}

InteractEffects detail::interact_af(AgentState& rec, AgentState& sen, const ProtocolParams& p)
{
    InteractEffects fx;
    NoBits none;
    partition_roles(rec, sen, none, p);

    if (rec.role == Role::A) {
        count_time(rec, p);
        timer_af(rec, p);
    }
    if (sen.role == Role::A) {
        count_time(sen, p);
        timer_af(sen, p);
    }

    const bool rec_a = rec.role == Role::A;
    const bool sen_a = sen.role == Role::A;
    if ((rec_a && sen.role == Role::F) || (sen_a && rec.role == Role::F)) {
        // The A agent's coin is heads when it is the receiver.
        AgentState& a = rec_a ? rec : sen;
        if (!a.log_size_generated) {
            if (sen_a) {
                ++sen.clk;
            } else {
                rec.log_size_generated = true;
                rec.clk += p.clk_offset;
            }
        } else if (!a.gr_generated) {
            if (sen_a)
                ++sen.gr;
            else
                rec.gr_generated = true;
        }
    }

    if (rec_a && sen_a && rec.gr_generated && sen.gr_generated) {
        fx.restarts += propagate_clk(rec, sen, none, p.variant);
        if (rec.gr_generated && sen.gr_generated) {
            if (rec.epoch < sen.epoch) {
                rec.epoch = sen.epoch;
                bank_gr(rec);
            } else if (sen.epoch < rec.epoch) {
                sen.epoch = rec.epoch;
                bank_gr(sen);
            }
        }
        if (rec.gr_generated && sen.gr_generated)
            propagate_gr(rec, sen);
    }

    share_output(rec, sen);
    return fx;
}

bool is_stable(const std::vector<AgentState>& agents, Variant variant)
{
    std::uint32_t max_clk = 0;
    for (const auto& a : agents) {
        if (!a.protocol_done || !a.output)
            return false;
        if (variant == Variant::af_synthetic && a.role == Role::A && !a.log_size_generated)
            return false;
        if (tracks_clk(a, variant))
            max_clk = std::max(max_clk, a.clk);
    }
    for (const auto& a : agents) {
        if (tracks_clk(a, variant) && a.clk != max_clk)
            return false;
    }
    return true;
}

bool is_converged(const std::vector<AgentState>& agents, Variant variant)
{
    if (!is_stable(agents, variant))
        return false;
    const Rational& first = *agents.front().output;
    return std::all_of(agents.begin(), agents.end(), [&](const AgentState& a) { return *a.output == first; });
}

void record_estimation_snapshot(const Population<AgentState>& pop, Trace& trace)
{
    if (trace.field_names.empty())
        trace.field_names = {"clk", "gr", "time", "epoch", "sum"};
    Snapshot s;
    s.parallel_time = pop.parallel_time();
    s.field_min.assign(5, std::numeric_limits<std::int64_t>::max());
    s.field_max.assign(5, std::numeric_limits<std::int64_t>::min());
    for (const auto& a : pop) {
        const std::int64_t v[5] = {a.clk, a.gr, a.time, a.epoch, static_cast<std::int64_t>(a.sum)};
        for (int i = 0; i < 5; ++i) {
            s.field_min[i] = std::min(s.field_min[i], v[i]);
            s.field_max[i] = std::max(s.field_max[i], v[i]);
        }
        if (a.protocol_done)
            ++s.agents_done;
    }
    trace.add(std::move(s));
}

RunResult run_size_estimation(std::size_t n, const ProtocolParams& params, std::uint64_t seed,
                              const EstimationOptions& opts)
{
    params.validate();
    Population<AgentState> pop(n, init_agent());
    Rng rng(seed);

    RunResult result;
    result.n = n;
    result.seed = seed;
    FieldRanges& ranges = result.field_ranges;

    auto step = [&](AgentState& rec, AgentState& sen, const InteractionRecord&, Rng& bits) {
        const InteractEffects fx = interact(rec, sen, bits, params);
        result.restart_count += fx.restarts;
        ranges.observe(rec);
        ranges.observe(sen);
    };
    auto stop = [&](const Population<AgentState>& p) { return is_stable(p.agents(), params.variant); };

    RunControl ctl;
    ctl.max_interactions = opts.max_interactions;
    ctl.snapshot_every = opts.snapshot_every;
    ctl.trace = opts.trace;
    const RunOutcome out = run(pop, rng, step, stop, record_estimation_snapshot, ctl);

    result.stable = out.stopped;
    result.converged = out.stopped && is_converged(pop, params.variant);
    result.convergence_parallel_time = out.parallel_time;
    result.interactions = out.interactions;

    const double log_n = std::log2(static_cast<double>(n));
    result.outputs.reserve(n);
    double err = 0.0;
    for (const auto& a : pop) {
        result.outputs.push_back(a.output);
        err = a.output ? std::max(err, std::abs(a.output->value() - log_n)) : std::numeric_limits<double>::infinity();
        if (a.role == Role::A)
            ++result.role_count_a;
        else if (a.role != Role::X)
            ++result.role_count_other;
        result.final_clk = std::max(result.final_clk, a.clk);
    }
    result.error = err;
    if (result.converged)
        result.output = pop[0].output;
    return result;
}

RangeLimits space_table_limits(std::size_t n)
{
    const double lg = std::log2(static_cast<double>(n));
    return {2 * lg + 1, 2 * lg, 191 * lg, 11 * lg, 22 * lg * lg};
}

RunMetrics measure_run(const RunResult& result, std::size_t n)
{
    RunMetrics m;
    m.error = result.error;
    if (result.output) {
        m.output_value = result.output->value();
        m.output_rounded = result.output->rounded();
    }
    m.convergence_parallel_time = result.convergence_parallel_time;
    m.restarts = result.restart_count;
    m.ranges = result.field_ranges;
    const RangeLimits lim = space_table_limits(n);
    m.clk_in_table = m.ranges.clk <= lim.clk;
    m.gr_in_table = m.ranges.gr <= lim.gr;
    m.time_in_table = m.ranges.time <= lim.time;
    m.epoch_in_table = m.ranges.epoch <= lim.epoch;
    m.sum_in_table = static_cast<double>(m.ranges.sum) <= lim.sum;
    return m;
}

} // namespace popsize
