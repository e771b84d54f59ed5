#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>

namespace popsize::bounds {

class OutOfDomain : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Tail parameters: Pr[|X - EX| >= lambda] <= alpha * exp(-lambda / beta).
struct SubExpParams {
    double alpha = 3.31;
    double beta = 2.0;
};

/// Constants of the expected-maximum interval. delta0 is derived.
struct MaxGeomConstants {
    static constexpr double gamma = 0.57721566490153286061;
    static constexpr double eps1 = 0.01;
    static constexpr double eps2 = 0.0006;
    static double delta0();
};

/// A bound value plus whether it exceeds 1 (and so says nothing).
struct BoundValue {
    double value = 0.0;
    bool vacuous = false;

    static BoundValue of(double v) { return {v, v >= 1.0}; }
    double clamped() const { return value < 1.0 ? value : 1.0; }
};

double harmonic(std::uint64_t n);

/// 1 + 2 alpha beta^2 s^2, valid for |s| <= 1/(2 beta).
double subexp_mgf_bound(const SubExpParams& params, double s);

/// 2 (1 + alpha/2)^K exp(-t / (2 beta)) for a sum of K independent sub-exponential terms.
BoundValue chernoff_sum_bound(const SubExpParams& params, std::uint64_t K, double t);

/// Interval containing E[max of N p-geometrics], q = 1 - p. Needs N >= 50, q >= 1/e.
std::pair<double, double> expected_max_interval(std::uint64_t N, double q);

/// Bound on Pr[E M - M >= lambda].
BoundValue max_geom_lower_tail(double q, double lambda);

/// Bound on Pr[M - E M >= lambda].
BoundValue max_geom_upper_tail(double q, double lambda);

/// 3.31 exp(-lambda / 2): two-sided tail of a max of 1/2-geometrics.
BoundValue half_geom_subexp_tail(double lambda);

/// Bounds on Pr[M >= 2 log N] and Pr[M <= log N - log ln N]; both 1/N.
std::pair<double, double> max_geom_range_tails(std::uint64_t N);

/// 2 exp(K - t/4): two-sided tail of a sum of K maxima.
BoundValue sum_maxima_tail(std::uint64_t K, double t);

/// Pr[|S/K - log N| >= 4.7] <= 2/N. Requires K >= 4 log2 N.
double average_estimate_tail(std::uint64_t N, std::uint64_t K);

/// 4 n^(1 - alpha_u/4): Pr[epidemic takes longer than alpha_u ln n].
BoundValue epidemic_tail(double n, double alpha_u);

/// a^(-(alpha_u - 4c)^2 / (12 c)) for an epidemic confined to a = n/c agents.
BoundValue partial_epidemic_tail(double a, double c, double alpha_u);

/// 27 n^-3: the c = 3, alpha_u = 24 case stated directly.
double partial_epidemic_c3_tail(double n);

/// D = 2C + sqrt(12 C) such that each agent has at most D ln n interactions in
/// C ln n time, failing with probability 1/n. Requires C >= 3.
struct InteractionCountBound {
    double D = 0.0;
    double failure_probability = 0.0;
};
InteractionCountBound interaction_count_bound(double C, double n);

/// exp(-2 a^2 / n), per side, for the number of A agents leaving [n/2 - a, n/2 + a].
BoundValue partition_tail(double n, double a);

/// (2 delta e^(m/n))^(delta k): at most delta*k of k empty bins survive m balls.
BoundValue balls_bins_decay_bound(double k, double delta, double m, double n);

/// (2 delta e^(3T))^(delta k): a state's count drops to delta*k within time T.
BoundValue count_decay_bound(double k, double delta, double T);

} // namespace popsize::bounds
