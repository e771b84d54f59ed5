#include <doctest.h>

#include "oracle.hpp"

namespace {

void check(int n, int horizon, oracle::Params p)
{
    const auto rep = oracle::exhaustive_check(n, horizon, p);
    INFO(rep.first_mismatch);
    MESSAGE("n=" << n << " af=" << p.af << " cte=" << p.cte << " configurations=" << rep.configurations
                 << " transitions=" << rep.transitions << " with_output=" << rep.with_output);
    CHECK(rep.mismatches == 0);
    CHECK(rep.transitions > 0);
    if (n == 3 && p.cte == 1)
        CHECK(rep.with_output > 0);
}

} // namespace

TEST_CASE("oracle: A/S matches the reference transcription, n=2 and n=3, horizon 12")
{
    oracle::Params p;
    p.cte = 1;
    p.mult = 1;
    check(2, 12, p);
    check(3, 12, p);
}

TEST_CASE("oracle: A/S with a longer epoch and more epochs")
{
    oracle::Params p;
    p.cte = 2;
    p.mult = 2;
    p.offset = 0;
    check(2, 12, p);
    check(3, 12, p);
}

TEST_CASE("oracle: A/F matches the reference transcription, n=2 and n=3, horizon 12")
{
    oracle::Params p;
    p.af = true;
    p.cte = 1;
    p.mult = 1;
    check(2, 12, p);
    check(3, 12, p);
    // Long enough epochs that clk and gr generation run before the timer.
    p.cte = 3;
    p.mult = 2;
    check(2, 12, p);
    check(3, 12, p);
}

TEST_CASE("oracle: the checker reports a differing transition rule")
{
    oracle::Params p;
    p.cte = 1;
    p.mult = 1;
    popsize::ProtocolParams lib;
    lib.cte = 1;
    lib.epoch_multiplier = 1;
    lib.clk_offset = 1;
    CHECK(oracle::exhaustive_check(2, 3, p, 3, &lib).mismatches > 0);
    lib.clk_offset = 2;
    lib.cte = 2;
    CHECK(oracle::exhaustive_check(3, 12, p, 3, &lib).mismatches > 0);
}
