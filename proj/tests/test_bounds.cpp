#include <doctest.h>

#include <cmath>
#include <string>

#include "popsize/bounds.hpp"
#include "popsize/statlab.hpp"

using namespace popsize::bounds;

namespace {

// Exact Pr[M <= t] for the max of N 1/2-geometrics (flips including the head).
double max_cdf(double N, double t)
{
    if (t < 1)
        return 0.0;
    return std::pow(1.0 - std::ldexp(1.0, -static_cast<int>(std::floor(t))), N);
}

} // namespace

TEST_CASE("harmonic: values and the log sandwich")
{
    CHECK(harmonic(1) == 1.0);
    CHECK(harmonic(4) == doctest::Approx(25.0 / 12.0));
    CHECK_THROWS_AS(harmonic(0), OutOfDomain);
    for (std::uint64_t n : {2ull, 3ull, 10ull, 100ull, 12345ull, 1000000ull}) {
        const double h = harmonic(n);
        CHECK(std::log(double(n)) < h);
        CHECK(h < std::log(double(n)) + 1);
        // ln n + gamma + 1/(2n) - 1/(12 n^2) asymptotic, accurate to 1/(120 n^4)
        const double dn = double(n);
        CHECK(h == doctest::Approx(std::log(dn) + MaxGeomConstants::gamma + 1 / (2 * dn) - 1 / (12 * dn * dn))
                       .epsilon(1e-3));
    }
}

TEST_CASE("constants: delta0 derived from gamma and eps2")
{
    CHECK(MaxGeomConstants::delta0() == doctest::Approx(0.5 + 0.5772156649 / std::log(2.0) - 0.0006));
    CHECK(MaxGeomConstants::eps1 == 0.01);
    CHECK(MaxGeomConstants::eps2 == 0.0006);
}

TEST_CASE("subexp_mgf_bound: values and domain")
{
    SubExpParams p;
    CHECK(subexp_mgf_bound(p, 0.0) == 1.0);
    CHECK(subexp_mgf_bound(p, 0.25) == doctest::Approx(2.655));
    CHECK(subexp_mgf_bound(p, -0.25) == doctest::Approx(2.655));
    CHECK_THROWS_AS(subexp_mgf_bound(p, 0.26), OutOfDomain);
    CHECK_THROWS_AS(subexp_mgf_bound(p, -0.3), OutOfDomain);
}

TEST_CASE("subexp_mgf_bound: dominates the exact MGF of the centered maximum at s=1/4")
{
    // E[exp(s (M - E M))] from the exact pmf Pr[M = t] = F(t) - F(t-1).
    const double N = 1024, s = 0.25;
    const double mean = popsize::statlab::expected_max_geometric(1024);
    double mgf = 0.0;
    for (int t = 1; t < 200; ++t)
        mgf += (max_cdf(N, t) - max_cdf(N, t - 1)) * std::exp(s * (t - mean));
    CHECK(mgf > 1.0);
    CHECK(mgf <= subexp_mgf_bound(SubExpParams{}, s));
}

TEST_CASE("chernoff_sum_bound: values, decay and the e^K form")
{
    SubExpParams p;
    CHECK(chernoff_sum_bound(p, 1, 0).value == doctest::Approx(5.31));
    CHECK(chernoff_sum_bound(p, 1, 0).vacuous);
    double prev = chernoff_sum_bound(p, 10, 0).value;
    for (double t = 1; t < 400; t += 1) {
        const double v = chernoff_sum_bound(p, 10, t).value;
        REQUIRE(v < prev);
        prev = v;
    }
    CHECK(prev < 1e-20);
    for (std::uint64_t K = 1; K <= 60; ++K)
        for (double t = 0; t <= 400; t += 7)
            REQUIRE(chernoff_sum_bound(p, K, t).value <= sum_maxima_tail(K, t).value);
    CHECK(chernoff_sum_bound(SubExpParams{4.0, 2.0}, 5, 10).value > chernoff_sum_bound(p, 5, 10).value);
    CHECK(chernoff_sum_bound(p, 6, 10).value > chernoff_sum_bound(p, 5, 10).value);
}

TEST_CASE("expected_max_interval: N=1024 lies inside (11, 11.5) and holds the exact mean")
{
    const auto [lo, hi] = expected_max_interval(1024, 0.5);
    CHECK(lo > 11.0);
    CHECK(hi < 11.5);
    CHECK(lo < hi);
    const double exact = popsize::statlab::expected_max_geometric(1024);
    CHECK(lo < exact);
    CHECK(exact < hi);
    CHECK_THROWS_AS(expected_max_interval(49, 0.5), OutOfDomain);
    CHECK_THROWS_AS(expected_max_interval(1024, 0.3), OutOfDomain);
}

TEST_CASE("expected_max_interval: contained in (log N + 1, log N + 3/2) for N in [50, 10^6]")
{
    for (std::uint64_t N = 50; N <= 1000000; N = N < 2000 ? N + 1 : N + N / 97) {
        const auto [lo, hi] = expected_max_interval(N, 0.5);
        const double l = std::log2(double(N));
        REQUIRE(lo > l + 1);
        REQUIRE(hi < l + 1.5);
        REQUIRE(lo < hi);
    }
}

TEST_CASE("max_geom tails: values, limits and domain")
{
    const auto v = max_geom_lower_tail(0.5, 5);
    CHECK(v.value > 0);
    CHECK(v.value < 1);
    // direct substitution
    const double g = MaxGeomConstants::gamma;
    const double e = 0.5 + 0.0006 - (g + 0.01) * std::log(0.5) - 5;
    CHECK(v.value == doctest::Approx(std::exp(-std::pow(0.5, e))));
    CHECK(max_geom_lower_tail(0.5, 30).value < 1e-100);
    CHECK(max_geom_upper_tail(0.5, 60).value < 1e-15);
    const double first = std::pow(0.5, 20 - 0.5 - 0.0006 - g * std::log(0.5));
    CHECK(max_geom_upper_tail(0.5, 20).value == doctest::Approx(first).epsilon(1e-5));
    CHECK_THROWS_AS(max_geom_lower_tail(1.5, 1), OutOfDomain);
    CHECK_THROWS_AS(max_geom_upper_tail(0.5, -1), OutOfDomain);
}

TEST_CASE("max_geom tails: consistency with 3.31 e^{-lambda/2} on a dense grid")
{
    for (double lambda = 0.01; lambda <= 50; lambda += 0.01) {
        const double up = max_geom_upper_tail(0.5, lambda).value;
        const double lo = max_geom_lower_tail(0.5, lambda).value;
        const double sub = half_geom_subexp_tail(lambda).value;
        REQUIRE(up <= sub);
        REQUIRE(up + lo <= sub);
    }
}

TEST_CASE("max_geom tails: monotone in lambda")
{
    double pu = 1e9, pl = 1e9, ps = 1e9;
    for (double lambda = 0.05; lambda <= 40; lambda += 0.05) {
        const double u = max_geom_upper_tail(0.5, lambda).value;
        const double l = max_geom_lower_tail(0.5, lambda).value;
        const double s = half_geom_subexp_tail(lambda).value;
        REQUIRE(u <= pu);
        REQUIRE(l <= pl);
        REQUIRE(s <= ps);
        pu = u;
        pl = l;
        ps = s;
    }
}

TEST_CASE("max_geom_upper_tail: holds against the exact distribution at N=1024")
{
    const double N = 1024;
    const double mean = popsize::statlab::expected_max_geometric(1024);
    for (int lambda = 1; lambda <= 12; ++lambda) {
        const double exact = 1.0 - max_cdf(N, std::ceil(mean + lambda) - 1);
        INFO("lambda=" << lambda);
        CHECK(exact <= max_geom_upper_tail(0.5, lambda).value);
        CHECK(exact <= half_geom_subexp_tail(lambda).value);
    }
}

TEST_CASE("max_geom_lower_tail: the stated formula is exceeded by the exact distribution")
{
    // Pr[E M - M >= 1] = Pr[M <= 10] = (1 - 2^-10)^1024 ~ 0.3677 for N=1024,
    // while the formula gives ~0.344: the bound as stated does not hold here.
    const double mean = popsize::statlab::expected_max_geometric(1024);
    CHECK(mean == doctest::Approx(11.33).epsilon(1e-3));
    const double exact = max_cdf(1024, std::floor(mean - 1));
    CHECK(exact == doctest::Approx(0.3677).epsilon(1e-3));
    const double formula = max_geom_lower_tail(0.5, 1).value;
    CHECK(formula == doctest::Approx(0.344).epsilon(5e-3));
    CHECK(exact > formula);
    // The gap persists through lambda=7: the exact tail uses the integer
    // threshold floor(E M - lambda), the formula a real one.
    for (int lambda = 1; lambda <= 7; ++lambda)
        CHECK(max_cdf(1024, std::floor(mean - lambda)) > max_geom_lower_tail(0.5, lambda).value);
    CHECK(max_cdf(1024, std::floor(mean - 8)) <= max_geom_lower_tail(0.5, 8).value);
}

TEST_CASE("half_geom_subexp_tail: values")
{
    CHECK(half_geom_subexp_tail(0).value == doctest::Approx(3.31));
    CHECK(half_geom_subexp_tail(0).vacuous);
    CHECK(half_geom_subexp_tail(2).value == doctest::Approx(1.2177).epsilon(1e-4));
    CHECK(half_geom_subexp_tail(2).clamped() == 1.0);
    CHECK(half_geom_subexp_tail(4).value == doctest::Approx(3.31 * std::exp(-2.0)));
}

TEST_CASE("max_geom_range_tails: 1/N each, and the exact high tail is about 2/N")
{
    const auto [hi, lo] = max_geom_range_tails(1024);
    CHECK(hi == std::ldexp(1.0, -10));
    CHECK(lo == std::ldexp(1.0, -10));
    // Pr[M >= 20] = 1 - (1 - 2^-19)^1024
    const double exact_high = 1.0 - max_cdf(1024, 19);
    CHECK(exact_high < 2.0 / 1024);
    CHECK(exact_high > 1.0 / 1024);
    // Pr[M <= 10 - log2 ln 1024] = Pr[M <= 7]
    const double exact_low = max_cdf(1024, 10 - std::log2(std::log(1024.0)));
    CHECK(exact_low < 1.0 / 1024);
}

TEST_CASE("sum_maxima_tail: values and monotonicity")
{
    CHECK(sum_maxima_tail(10, 40).value == doctest::Approx(2.0));
    CHECK(sum_maxima_tail(10, 40).vacuous);
    CHECK(sum_maxima_tail(10, 41).value < sum_maxima_tail(10, 40).value);
    CHECK(sum_maxima_tail(11, 41).value > sum_maxima_tail(10, 41).value);
    // K >= ln N / (a/4 - 1) makes 2 e^{K - aK/4} <= 2/N: here a = 4.7 + a shift
    // so that t = a K. With a = 8.7 and N = 1024, K=40 is plenty.
    const double a = 8.7, N = 1024;
    const double Kmin = std::log(N) / (a / 4 - 1);
    CHECK(40 >= Kmin);
    CHECK(sum_maxima_tail(40, a * 40).value <= 2 / N);
}

TEST_CASE("average_estimate_tail: 2/N and the K requirement")
{
    CHECK(average_estimate_tail(1024, 40) == doctest::Approx(2.0 / 1024));
    CHECK(average_estimate_tail(50, 4 * 6) == doctest::Approx(0.04));
    try {
        average_estimate_tail(1024, 39);
        FAIL("expected OutOfDomain");
    } catch (const OutOfDomain& e) {
        CHECK(std::string(e.what()).find("40") != std::string::npos);
    }
}

TEST_CASE("epidemic bounds: values and the c=3 specialization")
{
    CHECK(epidemic_tail(1e4, 8).value == doctest::Approx(4e-4));
    CHECK(epidemic_tail(1e4, 4).value == doctest::Approx(4.0));
    CHECK(epidemic_tail(1e4, 4).vacuous);
    CHECK(partial_epidemic_tail(1000, 3, 12.000001).value == doctest::Approx(1.0));
    CHECK_THROWS_AS(partial_epidemic_tail(1000, 3, 12), OutOfDomain);
    CHECK(partial_epidemic_c3_tail(3000) == doctest::Approx(27.0 / 2.7e10));
    for (double n = 6; n <= 1e6; n *= 1.7)
        REQUIRE(partial_epidemic_tail(n / 3, 3, 24).value <= partial_epidemic_c3_tail(n));
    // (n/3)^-4 at c=3, alpha_u=24
    CHECK(partial_epidemic_tail(1000, 3, 24).value == doctest::Approx(1e-12));
}

TEST_CASE("interaction_count_bound: 65 and 96 ln n constants")
{
    CHECK(interaction_count_bound(24, 1e4).D == doctest::Approx(48 + std::sqrt(288.0)));
    CHECK(interaction_count_bound(24, 1e4).D == doctest::Approx(64.97).epsilon(1e-4));
    CHECK(interaction_count_bound(24, 1e4).D < 65);
    CHECK(interaction_count_bound(36, 1e4).D == doctest::Approx(92.8).epsilon(1e-3));
    CHECK(interaction_count_bound(36, 1e4).D < 96);
    CHECK(interaction_count_bound(24, 1e4).failure_probability == doctest::Approx(1e-4));
    CHECK_THROWS_AS(interaction_count_bound(2.9, 100), OutOfDomain);
}

TEST_CASE("partition_tail: n^-2 at sqrt(n ln n), e^{-n/18} at n/6")
{
    for (double n : {100.0, 1e4, 1e6}) {
        CHECK(partition_tail(n, std::sqrt(n * std::log(n))).value == doctest::Approx(1 / (n * n)));
        CHECK(partition_tail(n, n / 6).value == doctest::Approx(std::exp(-n / 18)));
    }
    CHECK(partition_tail(1e4, 100).value == doctest::Approx(std::exp(-2.0)));
}

TEST_CASE("decay bounds: values, limits and the 2^{-k/81} form")
{
    CHECK(balls_bins_decay_bound(100, 0.5, 0, 100).value == doctest::Approx(1.0));
    for (double k : {81.0, 810.0, 1e4}) {
        const double v = balls_bins_decay_bound(k, 1.0 / 81, 3 * k, k).value;
        CHECK(v < std::pow(2.0, -k / 81));
        CHECK(count_decay_bound(k, 1.0 / 81, 1).value < std::pow(2.0, -k / 81));
    }
    CHECK(count_decay_bound(81, 1.0 / 81, 1).value <= 0.5);
    CHECK(2 * std::exp(3.0) < 40.2);
    CHECK(count_decay_bound(81, 1.0 / 81, 1e-12).value == doctest::Approx(2.0 / 81).epsilon(1e-9));
    CHECK(count_decay_bound(81, 1.0 / 81, 0.5).value < count_decay_bound(81, 1.0 / 81, 1).value);
    CHECK_THROWS_AS(count_decay_bound(10, 0, 1), OutOfDomain);
}

TEST_CASE("all bounds are positive and finite on their domains")
{
    for (double l = 0.5; l < 20; l += 0.5) {
        CHECK(max_geom_upper_tail(0.5, l).value > 0);
        CHECK(max_geom_lower_tail(0.5, l).value >= 0);
        CHECK(half_geom_subexp_tail(l).value > 0);
        CHECK(std::isfinite(sum_maxima_tail(5, l).value));
    }
}
