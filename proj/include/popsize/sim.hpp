#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "popsize/rng.hpp"

namespace popsize {

class InvalidPopulation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One scheduler draw: an ordered (receiver, sender) pair.
struct InteractionRecord {
    std::uint32_t receiver = 0;
    std::uint32_t sender = 0;
    std::uint64_t interaction_number = 0;

    friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

/// Uniform over the n(n-1) ordered pairs of distinct agents.
inline InteractionRecord pick_pair(Rng& rng, std::size_t n)
{
    if (n < 2)
        throw InvalidPopulation("population needs at least two agents, got " + std::to_string(n));
    if (n > 0xFFFFFFFFu)
        throw InvalidPopulation("population too large for 32-bit agent indices");
    const auto [r, s] = rng.uniform_pair32(static_cast<std::uint32_t>(n), static_cast<std::uint32_t>(n - 1));
    InteractionRecord rec;
    rec.receiver = r;
    rec.sender = s >= r ? s + 1 : s;
    return rec;
}

inline double parallel_time(std::uint64_t interactions, std::size_t n)
{
    return static_cast<double>(interactions) / static_cast<double>(n);
}

/// 10^4 * n * ceil(log2 n)^2 interactions.
inline std::uint64_t default_budget(std::size_t n)
{
    const auto lg = static_cast<std::uint64_t>(std::ceil(std::log2(static_cast<double>(n))));
    return 10000ULL * n * std::max<std::uint64_t>(lg * lg, 1);
}

template <class State>
class Population {
public:
    Population(std::size_t n, const State& init) : agents_(n, init)
    {
        if (n < 2)
            throw InvalidPopulation("population needs at least two agents, got " + std::to_string(n));
    }
    explicit Population(std::vector<State> agents) : agents_(std::move(agents))
    {
        if (agents_.size() < 2)
            throw InvalidPopulation("population needs at least two agents");
    }

    std::size_t size() const { return agents_.size(); }
    std::uint64_t interactions() const { return interactions_; }
    double parallel_time() const { return popsize::parallel_time(interactions_, agents_.size()); }

    State& operator[](std::size_t i) { return agents_[i]; }
    const State& operator[](std::size_t i) const { return agents_[i]; }

    const std::vector<State>& agents() const { return agents_; }
    auto begin() const { return agents_.begin(); }
    auto end() const { return agents_.end(); }

    void count_interaction() { ++interactions_; }

private:
    std::vector<State> agents_;
    std::uint64_t interactions_ = 0;
};

/// Metric snapshot taken at the snapshot cadence.
struct Snapshot {
    double parallel_time = 0.0;
    std::vector<std::int64_t> field_min;
    std::vector<std::int64_t> field_max;
    std::size_t agents_done = 0;
};

struct Trace {
    std::vector<std::string> field_names;
    std::vector<Snapshot> snapshots;
    bool log_interactions = false;
    std::vector<InteractionRecord> interactions;

    /// Appends unless a snapshot at the same or a later time already exists.
    void add(Snapshot s)
    {
        if (!snapshots.empty() && !(s.parallel_time > snapshots.back().parallel_time))
            return;
        snapshots.push_back(std::move(s));
    }
};

struct RunControl {
    std::uint64_t max_interactions = 0;  // 0 means default_budget(n)
    std::uint64_t snapshot_every = 0;    // 0 means once per parallel-time unit (n interactions)
    Trace* trace = nullptr;
};

struct RunOutcome {
    bool stopped = false;  // stop predicate fired before the budget ran out
    std::uint64_t interactions = 0;
    double parallel_time = 0.0;
};

/// Sequential scheduler loop.
///
/// `step(receiver, sender, record, rng)` applies one transition and may return
/// bool; returning true halts the run immediately and counts as the stop
/// predicate firing. `stop(population)` and `recorder(population, trace)` are
/// evaluated before the first interaction and then at every snapshot boundary.
template <class State, class Step, class Stop, class Recorder>
RunOutcome run(Population<State>& pop, Rng& rng, Step&& step, Stop&& stop, Recorder&& recorder,
               const RunControl& ctl = {})
{
    const std::size_t n = pop.size();
    const std::uint64_t budget = ctl.max_interactions ? ctl.max_interactions : default_budget(n);
    const std::uint64_t cadence = ctl.snapshot_every ? ctl.snapshot_every : n;
    Trace* trace = ctl.trace;

    auto outcome = [&](bool stopped) {
        return RunOutcome{stopped, pop.interactions(), pop.parallel_time()};
    };

    if (trace)
        recorder(pop, *trace);
    if (stop(pop))
        return outcome(true);

    std::uint64_t until_check = cadence;
    while (pop.interactions() < budget) {
        InteractionRecord rec = pick_pair(rng, n);
        rec.interaction_number = pop.interactions();
        pop.count_interaction();
        if (trace && trace->log_interactions)
            trace->interactions.push_back(rec);

        using StepResult = std::invoke_result_t<Step&, State&, State&, const InteractionRecord&, Rng&>;
        if constexpr (std::is_same_v<StepResult, bool>) {
            if (step(pop[rec.receiver], pop[rec.sender], rec, rng)) {
                if (trace)
                    recorder(pop, *trace);
                return outcome(true);
            }
        } else {
            step(pop[rec.receiver], pop[rec.sender], rec, rng);
        }

        if (--until_check == 0) {
            until_check = cadence;
            if (trace)
                recorder(pop, *trace);
            if (stop(pop))
                return outcome(true);
        }
    }
    if (trace)
        recorder(pop, *trace);
    return outcome(false);
}

/// Recorder that records nothing.
struct NoRecorder {
    template <class State>
    void operator()(const Population<State>&, Trace&) const
    {}
};

} // namespace popsize
