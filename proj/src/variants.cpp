#include "popsize/variants.hpp"

#include <algorithm>
#include <cmath>

#include "popsize/sim.hpp"

namespace popsize {

void backup_interact(BackupAgentState& x, BackupAgentState& y)
{
    std::uint32_t bound = std::max(x.k_ex, y.k_ex);
    const bool xl = x.kind == BackupKind::L, yl = y.kind == BackupKind::L;

    if (xl && yl) {
        if (x.level == y.level) {
            ++x.level;
            y.kind = BackupKind::F;
            y.level = x.level;
        } else {
            bound = std::max(bound, std::max(x.level, y.level) + 1);
        }
    } else if (!xl && !yl) {
        x.level = y.level = std::max(x.level, y.level);
    } else {
        const BackupAgentState& l = xl ? x : y;
        const BackupAgentState& f = xl ? y : x;
        if (l.level < f.level)
            bound = std::max(bound, f.level + 1);
    }
    if (xl)
        bound = std::max(bound, x.level);
    if (yl)
        bound = std::max(bound, y.level);
    x.k_ex = y.k_ex = bound;
}

bool backup_stabilized(const std::vector<BackupAgentState>& agents)
{
    std::uint64_t levels = 0;
    std::size_t l_count = 0;
    std::uint32_t top = 0;
    for (const auto& a : agents) {
        if (a.kind != BackupKind::L)
            continue;
        const std::uint64_t bit = std::uint64_t{1} << a.level;
        if (levels & bit)
            return false;
        levels |= bit;
        ++l_count;
        top = std::max(top, a.level);
    }
    const std::uint32_t target = l_count > 1 ? top + 1 : top;
    return std::all_of(agents.begin(), agents.end(), [&](const BackupAgentState& a) { return a.k_ex == target; });
}

std::uint64_t backup_mass(const std::vector<BackupAgentState>& agents)
{
    std::uint64_t mass = 0;
    for (const auto& a : agents)
        if (a.kind == BackupKind::L)
            mass += std::uint64_t{1} << a.level;
    return mass;
}

BackupResult run_backup(std::size_t n, std::uint64_t seed, std::uint64_t max_interactions)
{
    Population<BackupAgentState> pop(n, BackupAgentState{});
    Rng rng(seed);
    auto step = [](BackupAgentState& r, BackupAgentState& s, const InteractionRecord&, Rng&) {
        backup_interact(r, s);
    };
    auto stop = [](const Population<BackupAgentState>& p) { return backup_stabilized(p.agents()); };
    RunControl ctl;
    ctl.max_interactions = max_interactions;
    const RunOutcome out = run(pop, rng, step, stop, NoRecorder{}, ctl);

    BackupResult r;
    r.n = n;
    r.seed = seed;
    r.stabilized = out.stopped;
    r.interactions = out.interactions;
    r.parallel_time = out.parallel_time;
    for (const auto& a : pop) {
        r.k_ex = std::max(r.k_ex, a.k_ex);
        if (a.kind == BackupKind::L) {
            ++r.l_agents;
            r.max_level = std::max(r.max_level, a.level);
        }
    }
    return r;
}

std::int64_t combined_upper_bound(double k_est, std::int64_t k_ex, double shift)
{
    if (k_ex < 0)
        throw InvalidParameter("k_ex must be >= 0");
    const auto k = static_cast<std::int64_t>(std::ceil(k_est + shift));
    return std::max(k, k_ex);
}

std::uint64_t leader_threshold(const LeaderParams& params, std::uint32_t clk)
{
    const std::uint64_t c = clk;
    return static_cast<std::uint64_t>(params.k2) * params.protocol.epoch_multiplier * params.protocol.cte * c * c;
}

namespace {

bool leader_population_converged(const Population<LeaderAgentState>& pop, Variant v)
{
    for (const auto& a : pop)
        if (!a.est.protocol_done)
            return false;
    std::vector<AgentState> est;
    est.reserve(pop.size());
    for (const auto& a : pop)
        est.push_back(a.est);
    return is_converged(est, v);
}

} // namespace

LeaderResult run_leader(std::size_t n, const LeaderParams& params, std::uint64_t seed, std::uint64_t max_interactions,
                        bool stop_when_converged)
{
    params.protocol.validate();
    if (params.k2 < 1)
        throw InvalidParameter("k2 must be >= 1");
    std::vector<LeaderAgentState> init(n);
    init[0].is_leader = true;
    Population<LeaderAgentState> pop(std::move(init));
    Rng rng(seed);

    LeaderResult result;
    result.n = n;
    result.seed = seed;
    bool terminated = false;
    auto step = [&](LeaderAgentState& r, LeaderAgentState& s, const InteractionRecord&, Rng& bits) {
        const LeaderEffects fx = leader_interact(r, s, bits, params);
        result.contract_violation = result.contract_violation || fx.contract_violation;
        terminated = fx.terminated_now;
        return terminated;
    };
    auto stop = [&](const Population<LeaderAgentState>& p) {
        return stop_when_converged && leader_population_converged(p, params.protocol.variant);
    };
    RunControl ctl;
    ctl.max_interactions = max_interactions;
    const RunOutcome out = run(pop, rng, step, stop, NoRecorder{}, ctl);

    result.terminated = terminated;
    result.converged_first = out.stopped && !terminated;
    result.interactions = out.interactions;
    result.termination_parallel_time = out.parallel_time;
    std::vector<AgentState> est;
    est.reserve(n);
    for (const auto& a : pop)
        est.push_back(a.est);
    result.converged_at_termination = terminated && is_converged(est, params.protocol.variant);
    result.output = pop[0].est.output;
    return result;
}

} // namespace popsize
