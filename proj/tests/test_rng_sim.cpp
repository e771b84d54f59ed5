#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "popsize/rng.hpp"
#include "popsize/sim.hpp"
#include "popsize/size_estimation.hpp"

using namespace popsize;

TEST_CASE("rng: equal seeds give identical streams")
{
    Rng a = seeded_rng(0), b = seeded_rng(0);
    bool same = true;
    for (int i = 0; i < 1000000; ++i)
        same = same && a.next_u64() == b.next_u64();
    CHECK(same);
}

TEST_CASE("rng: seeds 1 and 2 differ within 64 draws")
{
    Rng a = seeded_rng(1), b = seeded_rng(2);
    int differ = 0;
    for (int i = 0; i < 64; ++i)
        differ += a.next_u64() != b.next_u64();
    CHECK(differ > 0);
}

TEST_CASE("rng: uniform over [0,2) has mean within the 3 sigma band")
{
    Rng r = seeded_rng(42);
    const int count = 1000000;
    long ones = 0;
    for (int i = 0; i < count; ++i)
        ones += static_cast<long>(r.uniform(2));
    const double mean = static_cast<double>(ones) / count;
    CHECK(mean >= 0.497);
    CHECK(mean <= 0.503);
}

TEST_CASE("rng: uniform stays in range and bits are balanced")
{
    Rng r(7);
    bool in_range = true;
    for (int i = 0; i < 100000; ++i)
        in_range = in_range && r.uniform(13) < 13;
    CHECK(in_range);
    long ones = 0;
    for (int i = 0; i < 1000000; ++i)
        ones += r.next_bit();
    CHECK(std::abs(ones - 500000) < 3 * 500);
}

TEST_CASE("rng: geometric_half consumes the same bits as a flip loop")
{
    Rng a(99), b(99);
    for (int i = 0; i < 10000; ++i) {
        const std::uint32_t g = a.geometric_half();
        std::uint32_t flips = 1;
        while (!b.next_bit())
            ++flips;
        REQUIRE(g == flips);
    }
    CHECK(a == b);
}

TEST_CASE("pick_pair: n < 2 is rejected")
{
    Rng r(1);
    CHECK_THROWS_AS(pick_pair(r, 1), InvalidPopulation);
    CHECK_THROWS_AS(pick_pair(r, 0), InvalidPopulation);
    CHECK_THROWS_AS(Population<int>(1, 0), InvalidPopulation);
}

TEST_CASE("pick_pair: n=2 splits evenly between the two ordered pairs")
{
    Rng r(5);
    int first = 0;
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) {
        const auto p = pick_pair(r, 2);
        REQUIRE(p.receiver != p.sender);
        first += p.receiver == 0;
    }
    CHECK(std::abs(first / double(draws) - 0.5) <= 0.01);
}

TEST_CASE("pick_pair: n=10 is uniform over the 90 ordered pairs")
{
    Rng r(11);
    const int draws = 1000000;
    std::map<std::pair<int, int>, int> counts;
    for (int i = 0; i < draws; ++i) {
        const auto p = pick_pair(r, 10);
        REQUIRE(p.receiver != p.sender);
        ++counts[{static_cast<int>(p.receiver), static_cast<int>(p.sender)}];
    }
    REQUIRE(counts.size() == 90);
    const double expect = draws / 90.0;
    const double sigma = std::sqrt(draws * (1.0 / 90) * (89.0 / 90));
    double chi2 = 0.0, worst = 0.0;
    for (const auto& [pair, c] : counts) {
        chi2 += (c - expect) * (c - expect) / expect;
        worst = std::max(worst, std::abs(c - expect));
    }
    CHECK(worst < 4 * sigma);
    // 89 degrees of freedom: mean 89, sd 13.3; 150 is beyond 4.5 sd.
    CHECK(chi2 < 150.0);
}

TEST_CASE("pick_pair: fixed seed gives a reproducible sequence")
{
    Rng a(3), b(3);
    for (int i = 0; i < 1000; ++i)
        REQUIRE(pick_pair(a, 3) == pick_pair(b, 3));
}

TEST_CASE("parallel_time: direct division")
{
    CHECK(parallel_time(1000, 100) == doctest::Approx(10.0));
    CHECK(parallel_time(0, 5) == 0.0);
    const std::size_t n = 1000;
    const double t = 24 * std::log(double(n));
    CHECK(parallel_time(static_cast<std::uint64_t>(n * t), n) == doctest::Approx(t).epsilon(1e-6));
    CHECK(parallel_time(10, 4) < parallel_time(11, 4));
}

TEST_CASE("default_budget: 10^4 n ceil(log2 n)^2")
{
    CHECK(default_budget(1024) == 10000ull * 1024 * 100);
    CHECK(default_budget(1000) == 10000ull * 1000 * 100);
    CHECK(default_budget(2) == 10000ull * 2);
}

TEST_CASE("run: stop true halts before any interaction")
{
    Population<int> pop(5, 0);
    Rng r(1);
    auto out = run(pop, r, [](int&, int&, const InteractionRecord&, Rng&) {},
                   [](const Population<int>&) { return true; }, NoRecorder{});
    CHECK(out.stopped);
    CHECK(out.interactions == 0);
    CHECK(out.parallel_time == 0.0);
}

TEST_CASE("run: identity step runs the whole budget and leaves the population alone")
{
    Population<int> pop(7, 3);
    Rng r(1);
    RunControl ctl;
    ctl.max_interactions = 10000;
    auto out = run(pop, r, [](int&, int&, const InteractionRecord&, Rng&) {},
                   [](const Population<int>&) { return false; }, NoRecorder{}, ctl);
    CHECK_FALSE(out.stopped);
    CHECK(out.interactions == 10000);
    for (int v : pop)
        CHECK(v == 3);
}

TEST_CASE("run: a step returning true halts immediately")
{
    Population<int> pop(4, 0);
    Rng r(1);
    RunControl ctl;
    ctl.max_interactions = 1000;
    int calls = 0;
    auto out = run(pop, r, [&](int&, int&, const InteractionRecord&, Rng&) { return ++calls == 17; },
                   [](const Population<int>&) { return false; }, NoRecorder{}, ctl);
    CHECK(out.stopped);
    CHECK(out.interactions == 17);
}

TEST_CASE("run: snapshots are strictly increasing in time and the log is optional")
{
    Population<AgentState> pop(50, init_agent());
    Rng r(2);
    Trace trace;
    trace.log_interactions = true;
    RunControl ctl;
    ctl.max_interactions = 5000;
    ctl.snapshot_every = 100;
    ctl.trace = &trace;
    run(pop, r, [](AgentState& a, AgentState& b, const InteractionRecord&, Rng& g) {
            interact(a, b, g, ProtocolParams::fast());
        },
        [](const Population<AgentState>&) { return false; }, record_estimation_snapshot, ctl);
    CHECK(trace.interactions.size() == 5000);
    REQUIRE(trace.snapshots.size() >= 50);
    for (std::size_t i = 1; i < trace.snapshots.size(); ++i)
        CHECK(trace.snapshots[i].parallel_time > trace.snapshots[i - 1].parallel_time);
    CHECK(trace.field_names.size() == 5);
    const auto before = trace.snapshots.size();
    trace.add(trace.snapshots.back());
    CHECK(trace.snapshots.size() == before);
}

TEST_CASE("run: size estimation at n=100 converges and is bit-identical on re-run")
{
    const auto p = ProtocolParams::faithful();
    const RunResult a = run_size_estimation(100, p, 12345);
    const RunResult b = run_size_estimation(100, p, 12345);
    CHECK(a.converged);
    CHECK(a.interactions < default_budget(100));
    CHECK(a.interactions == b.interactions);
    CHECK(a.restart_count == b.restart_count);
    CHECK(a.convergence_parallel_time == b.convergence_parallel_time);
    REQUIRE(a.outputs.size() == b.outputs.size());
    for (std::size_t i = 0; i < a.outputs.size(); ++i) {
        REQUIRE(a.outputs[i].has_value() == b.outputs[i].has_value());
        if (a.outputs[i]) {
            CHECK(a.outputs[i]->num == b.outputs[i]->num);
            CHECK(a.outputs[i]->den == b.outputs[i]->den);
        }
    }
}
