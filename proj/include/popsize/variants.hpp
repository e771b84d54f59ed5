#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "popsize/agent.hpp"
#include "popsize/rng.hpp"
#include "popsize/size_estimation.hpp"

namespace popsize {

// Exact backup -------------------------------------------------------------

enum class BackupKind : std::uint8_t { L, F };

/// One agent of the probability-1 backup. `k_ex` is the largest lower bound on
/// ceil(log2 n) this agent has witnessed or heard about.
struct BackupAgentState {
    BackupKind kind = BackupKind::L;
    std::uint32_t level = 0;
    std::uint32_t k_ex = 0;

    friend bool operator==(const BackupAgentState&, const BackupAgentState&) = default;
};

/// L_i, L_i -> L_{i+1}, F_{i+1}; F_i, F_j -> F_max, F_max; other pairs keep
/// kind and level. Each meeting also yields a bound that both agents fold
/// into k_ex by max:
///   two L agents at different levels i < j: n > 2^j, so j + 1;
///   F_j with L_i, i < j: the mass behind F_j is elsewhere, so j + 1;
///   any L_i: i.
void backup_interact(BackupAgentState& x, BackupAgentState& y);

/// No two L agents share a level and every agent holds the final k_ex: the
/// top L level, plus one when more than one L agent is left.
bool backup_stabilized(const std::vector<BackupAgentState>& agents);

/// sum over L agents of 2^level. Invariant under backup_interact.
std::uint64_t backup_mass(const std::vector<BackupAgentState>& agents);

struct BackupResult {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    bool stabilized = false;
    std::uint64_t interactions = 0;
    double parallel_time = 0.0;
    std::uint32_t k_ex = 0;          // common value once stabilized, else the max held
    std::size_t l_agents = 0;
    std::uint32_t max_level = 0;
};

BackupResult run_backup(std::size_t n, std::uint64_t seed, std::uint64_t max_interactions = 0);

/// max(ceil(k_est + shift), k_ex). Throws InvalidParameter for k_ex < 0.
std::int64_t combined_upper_bound(double k_est, std::int64_t k_ex, double shift = 3.7);

// Leader-driven termination ------------------------------------------------

struct LeaderAgentState {
    bool is_leader = false;
    bool terminated = false;
    std::uint64_t phase = 0;   // leader's own interactions since its last restart
    AgentState est;
};

struct LeaderParams {
    ProtocolParams protocol = ProtocolParams::faithful(Variant::as_randomized);
    std::uint32_t k2 = 4;
};

/// The leader terminates after k2 * epoch_multiplier * cte * clk^2 of its own
/// interactions, the time every agent needs to run all its epochs.
std::uint64_t leader_threshold(const LeaderParams& params, std::uint32_t clk);

struct LeaderEffects {
    std::uint32_t restarts = 0;
    bool contract_violation = false;   // two leaders met
    bool terminated_now = false;       // the leader crossed its threshold in this interaction
};

/// Embedded size-estimation step, leader counting, and the terminated epidemic.
template <BitSource Bits>
LeaderEffects leader_interact(LeaderAgentState& rec, LeaderAgentState& sen, Bits& bits, const LeaderParams& params)
{
    LeaderEffects fx;
    if (rec.is_leader && sen.is_leader)
        fx.contract_violation = true;
    const std::uint32_t clk_r = rec.est.clk, clk_s = sen.est.clk;
    fx.restarts = interact(rec.est, sen.est, bits, params.protocol).restarts;

    for (LeaderAgentState* a : {&rec, &sen}) {
        if (!a->is_leader || a->terminated)
            continue;
        if (a->est.clk != (a == &rec ? clk_r : clk_s))
            a->phase = 0;
        if (++a->phase >= leader_threshold(params, a->est.clk)) {
            a->terminated = true;
            fx.terminated_now = true;
        }
    }
    if (rec.terminated || sen.terminated)
        rec.terminated = sen.terminated = true;
    return fx;
}

struct LeaderResult {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    bool terminated = false;
    bool converged_at_termination = false;
    bool converged_first = false;      // stopped at convergence before any termination
    bool contract_violation = false;
    std::uint64_t interactions = 0;
    double termination_parallel_time = 0.0;
    std::optional<Rational> output;    // leader's output when it terminated
};

/// Agent 0 is the leader. Runs until the leader terminates or the budget ends.
///
/// With stop_when_converged the run also ends at the first convergence check
/// that finds the population converged and nobody terminated. A converged
/// population can no longer change clk or outputs, so the later termination
/// is certain to come after convergence; the run just skips waiting for it.
LeaderResult run_leader(std::size_t n, const LeaderParams& params, std::uint64_t seed,
                        std::uint64_t max_interactions = 0, bool stop_when_converged = false);

/// Termination (observed or certain) came after is_converged held.
inline bool terminated_after_convergence(const LeaderResult& r)
{
    return r.converged_first || (r.terminated && r.converged_at_termination);
}

} // namespace popsize
