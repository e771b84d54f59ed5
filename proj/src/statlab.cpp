#include "popsize/statlab.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "popsize/size_estimation.hpp"
#include "popsize/sim.hpp"

namespace popsize::statlab {

std::uint32_t draw_max_geometric(Rng& rng, std::uint64_t N)
{
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    std::uint64_t running = N;
    std::uint32_t rounds = 0;
    while (running > 0) {
        ++rounds;
        std::uint64_t tails = 0;
        std::uint64_t left = running;
        for (; left >= 64; left -= 64)
            tails += static_cast<std::uint64_t>(std::popcount(rng.next_u64()));
        if (left > 0)
            tails += static_cast<std::uint64_t>(std::popcount(rng.next_u64() & ((std::uint64_t{1} << left) - 1)));
        running = tails;
    }
    return rounds;
}

std::vector<std::uint32_t> sample_max_geometric(Rng& rng, std::uint64_t N, std::size_t count)
{
    if (count < 1)
        throw std::invalid_argument("count must be >= 1");
    std::vector<std::uint32_t> out(count);
    for (auto& m : out)
        m = draw_max_geometric(rng, N);
    return out;
}

std::vector<std::uint64_t> sample_sum_of_maxima(Rng& rng, std::uint64_t N, std::uint64_t K, std::size_t count)
{
    if (K < 1)
        throw std::invalid_argument("K must be >= 1");
    if (count < 1)
        throw std::invalid_argument("count must be >= 1");
    std::vector<std::uint64_t> out(count);
    for (auto& s : out) {
        s = 0;
        for (std::uint64_t i = 0; i < K; ++i)
            s += draw_max_geometric(rng, N);
    }
    return out;
}

double expected_max_geometric(std::uint64_t N)
{
    if (N < 1)
        throw std::invalid_argument("N must be >= 1");
    const double dn = static_cast<double>(N);
    double total = 0.0;
    for (int t = 0; t < 1100; ++t) {
        // 1 - (1 - 2^-t)^N, written to avoid cancellation for large t.
        const double term = -std::expm1(dn * std::log1p(-std::ldexp(1.0, -t)));
        if (t > 0 && term < 1e-18)
            break;
        total += t == 0 ? 1.0 : term;
    }
    return total;
}

double measure_epidemic_time(std::size_t n, double subpop_fraction, Rng& rng)
{
    if (!(subpop_fraction > 0.0 && subpop_fraction <= 1.0))
        throw std::invalid_argument("subpop_fraction must lie in (0, 1]");
    const auto m = static_cast<std::size_t>(std::floor(subpop_fraction * static_cast<double>(n)));
    if (m < 2)
        throw std::invalid_argument("subpopulation needs at least two agents");
    std::vector<std::uint8_t> value(m, 0);
    value[0] = 1;
    std::size_t holders = 1;
    std::uint64_t interactions = 0;
    while (holders < m) {
        const InteractionRecord r = pick_pair(rng, n);
        ++interactions;
        if (r.receiver >= m || r.sender >= m)
            continue;
        const auto [a, b] = epidemic_max(value[r.receiver], value[r.sender]);
        holders += (a != value[r.receiver]) + (b != value[r.sender]);
        value[r.receiver] = a;
        value[r.sender] = b;
    }
    return parallel_time(interactions, n);
}

std::uint64_t measure_interaction_counts(std::size_t n, double window_parallel_time, Rng& rng)
{
    if (window_parallel_time < 0)
        throw std::invalid_argument("window must be >= 0");
    std::vector<std::uint64_t> count(n, 0);
    const auto draws = static_cast<std::uint64_t>(std::llround(window_parallel_time * static_cast<double>(n)));
    for (std::uint64_t i = 0; i < draws; ++i) {
        const InteractionRecord r = pick_pair(rng, n);
        ++count[r.receiver];
        ++count[r.sender];
    }
    return *std::max_element(count.begin(), count.end());
}

std::size_t measure_partition(std::size_t n, Rng& rng)
{
    std::vector<AgentState> agents(n, init_agent());
    const ProtocolParams params = ProtocolParams::faithful(Variant::as_randomized);
    std::size_t unassigned = n;
    while (unassigned > 0) {
        const InteractionRecord r = pick_pair(rng, n);
        AgentState& rec = agents[r.receiver];
        AgentState& sen = agents[r.sender];
        const bool before = rec.role == Role::X, before_s = sen.role == Role::X;
        partition_roles(rec, sen, rng, params);
        unassigned -= (before && rec.role != Role::X) + (before_s && sen.role != Role::X);
    }
    return static_cast<std::size_t>(
        std::count_if(agents.begin(), agents.end(), [](const AgentState& a) { return a.role == Role::A; }));
}

std::size_t measure_count_decay(std::size_t n, std::size_t k, double T, Rng& rng)
{
    if (k > n)
        throw std::invalid_argument("k must be <= n");
    if (T < 0)
        throw std::invalid_argument("T must be >= 0");
    std::vector<std::uint8_t> marked(n, 0);
    std::fill(marked.begin(), marked.begin() + static_cast<std::ptrdiff_t>(k), 1);
    std::size_t current = k, lowest = k;
    const auto draws = static_cast<std::uint64_t>(std::llround(T * static_cast<double>(n)));
    for (std::uint64_t i = 0; i < draws && current > 0; ++i) {
        const InteractionRecord r = pick_pair(rng, n);
        current -= marked[r.receiver] + marked[r.sender];
        marked[r.receiver] = 0;
        marked[r.sender] = 0;
        lowest = std::min(lowest, current);
    }
    return lowest;
}

EmpiricalTail EmpiricalTail::from_counts(std::vector<double> thresholds, const std::vector<std::size_t>& hits,
                                         std::size_t count)
{
    if (count == 0)
        throw std::invalid_argument("empirical tail needs at least one sample");
    if (hits.size() != thresholds.size())
        throw std::invalid_argument("one hit count per threshold");
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw std::invalid_argument("thresholds must be sorted");
    EmpiricalTail t;
    t.thresholds = std::move(thresholds);
    t.sample_count = count;
    const double m = static_cast<double>(count);
    for (std::size_t h : hits) {
        const double p = static_cast<double>(h) / m;
        const double s = std::sqrt(p * (1.0 - p) / m);
        t.survival.push_back(p);
        t.sigma.push_back(s);
        t.confidence_halfwidths.push_back(3.0 * s);
    }
    return t;
}

BoundReport verify_bound(const EmpiricalTail& empirical, const std::function<double(double)>& analytic,
                         double slack_sigma, std::string bound_name, std::string parameters)
{
    if (empirical.thresholds.empty())
        throw std::invalid_argument("verify_bound needs at least one threshold");
    BoundReport report;
    report.bound_name = std::move(bound_name);
    report.parameters = std::move(parameters);
    report.verdict = true;
    for (std::size_t i = 0; i < empirical.thresholds.size(); ++i) {
        ThresholdCheck c;
        c.threshold = empirical.thresholds[i];
        c.empirical = empirical.survival[i];
        c.slack = slack_sigma * empirical.sigma[i];
        c.analytic = analytic(c.threshold);
        c.pass = c.empirical - c.slack <= c.analytic;
        report.verdict = report.verdict && c.pass;
        report.checks.push_back(c);
    }
    return report;
}

} // namespace popsize::statlab
