#include "popsize/bounds.hpp"

#include <cmath>
#include <string>

namespace popsize::bounds {

namespace {

void require(bool ok, const char* what)
{
    if (!ok)
        throw OutOfDomain(what);
}

double lg(double x) { return std::log2(x); }

} // namespace

double MaxGeomConstants::delta0()
{
    return 0.5 + gamma / std::log(2.0) - eps2;
}

double harmonic(std::uint64_t n)
{
    require(n >= 1, "n must be >= 1");
    double h = 0.0;
    for (std::uint64_t i = n; i >= 1; --i)
        h += 1.0 / static_cast<double>(i);
    return h;
}

double subexp_mgf_bound(const SubExpParams& params, double s)
{
    require(params.alpha > 0 && params.beta > 0, "alpha and beta must be positive");
    require(std::abs(s) <= 1.0 / (2.0 * params.beta), "|s| must be at most 1/(2 beta)");
    return 1.0 + 2.0 * params.alpha * params.beta * params.beta * s * s;
}

BoundValue chernoff_sum_bound(const SubExpParams& params, std::uint64_t K, double t)
{
    require(params.alpha > 0 && params.beta > 0, "alpha and beta must be positive");
    require(K >= 1, "K must be >= 1");
    require(t >= 0, "t must be >= 0");
    const double logv = std::log(2.0) + static_cast<double>(K) * std::log1p(params.alpha / 2.0) -
                        t / (2.0 * params.beta);
    return BoundValue::of(std::exp(logv));
}

std::pair<double, double> expected_max_interval(std::uint64_t N, double q)
{
    require(N >= 50, "N must be >= 50");
    require(q >= std::exp(-1.0) && q < 1.0, "q must lie in [1/e, 1)");
    const double l = std::log(1.0 / q);
    const double lnN = std::log(static_cast<double>(N));
    const double g = MaxGeomConstants::gamma;
    const double lo = (lnN + g) / l + 0.5 - MaxGeomConstants::eps2;
    const double hi = (lnN + g + MaxGeomConstants::eps1) / l + 0.5 + MaxGeomConstants::eps2;
    return {lo, hi};
}

BoundValue max_geom_lower_tail(double q, double lambda)
{
    require(q > 0 && q < 1, "q must lie in (0, 1)");
    require(lambda >= 0, "lambda must be >= 0");
    const double g = MaxGeomConstants::gamma;
    const double e = 0.5 + MaxGeomConstants::eps2 - (g + MaxGeomConstants::eps1) * std::log(q) - lambda;
    return BoundValue::of(std::exp(-std::pow(q, e)));
}

BoundValue max_geom_upper_tail(double q, double lambda)
{
    require(q > 0 && q < 1, "q must lie in (0, 1)");
    require(lambda >= 0, "lambda must be >= 0");
    const double g = MaxGeomConstants::gamma;
    const double e1 = lambda - 0.5 - MaxGeomConstants::eps2 - g * std::log(q);
    return BoundValue::of(std::pow(q, e1) + std::pow(q, 2.0 * e1));
}

BoundValue half_geom_subexp_tail(double lambda)
{
    require(lambda >= 0, "lambda must be >= 0");
    return BoundValue::of(3.31 * std::exp(-lambda / 2.0));
}

std::pair<double, double> max_geom_range_tails(std::uint64_t N)
{
    require(N >= 2, "N must be >= 2");
    const double inv = 1.0 / static_cast<double>(N);
    return {inv, inv};
}

BoundValue sum_maxima_tail(std::uint64_t K, double t)
{
    require(K >= 1, "K must be >= 1");
    require(t >= 0, "t must be >= 0");
    return BoundValue::of(2.0 * std::exp(static_cast<double>(K) - t / 4.0));
}

double average_estimate_tail(std::uint64_t N, std::uint64_t K)
{
    require(N >= 2, "N must be >= 2");
    const double need = 4.0 * lg(static_cast<double>(N));
    if (static_cast<double>(K) < need)
        throw OutOfDomain("K must be >= 4 log2 N = " + std::to_string(need) + " (at least " +
                          std::to_string(static_cast<std::uint64_t>(std::ceil(need))) + ")");
    return 2.0 / static_cast<double>(N);
}

BoundValue epidemic_tail(double n, double alpha_u)
{
    require(n >= 2, "n must be >= 2");
    require(alpha_u > 0, "alpha_u must be positive");
    return BoundValue::of(4.0 * std::pow(n, 1.0 - alpha_u / 4.0));
}

BoundValue partial_epidemic_tail(double a, double c, double alpha_u)
{
    require(a >= 2, "a must be >= 2");
    require(c >= 1, "c must be >= 1");
    require(alpha_u > 4.0 * c, "alpha_u must exceed 4c");
    const double d = alpha_u - 4.0 * c;
    return BoundValue::of(std::pow(a, -d * d / (12.0 * c)));
}

double partial_epidemic_c3_tail(double n)
{
    require(n >= 6, "n must be >= 6");
    return 27.0 / (n * n * n);
}

InteractionCountBound interaction_count_bound(double C, double n)
{
    require(C >= 3, "C must be >= 3");
    require(n >= 2, "n must be >= 2");
    return {2.0 * C + std::sqrt(12.0 * C), 1.0 / n};
}

BoundValue partition_tail(double n, double a)
{
    require(n >= 2, "n must be >= 2");
    require(a >= 0, "a must be >= 0");
    return BoundValue::of(std::exp(-2.0 * a * a / n));
}

BoundValue balls_bins_decay_bound(double k, double delta, double m, double n)
{
    require(n >= 1 && k >= 1 && k <= n, "need 1 <= k <= n");
    require(delta > 0 && delta <= 1, "delta must lie in (0, 1]");
    require(m >= 0, "m must be >= 0");
    return BoundValue::of(std::pow(2.0 * delta * std::exp(m / n), delta * k));
}

BoundValue count_decay_bound(double k, double delta, double T)
{
    require(k >= 1, "k must be >= 1");
    require(delta > 0 && delta <= 1, "delta must lie in (0, 1]");
    require(T >= 0, "T must be >= 0");
    return BoundValue::of(std::pow(2.0 * delta * std::exp(3.0 * T), delta * k));
}

} // namespace popsize::bounds
