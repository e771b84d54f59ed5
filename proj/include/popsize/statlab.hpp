#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "popsize/rng.hpp"

namespace popsize::statlab {

/// count draws of the maximum of N independent 1/2-geometric variables.
///
/// Simulated round by round: every variable still running flips a coin, the
/// ones that flip tails keep running, and the maximum is the number of rounds
/// until none remain. Same distribution as drawing N geometrics and taking the
/// max, but with one popcount per 64 coins.
std::vector<std::uint32_t> sample_max_geometric(Rng& rng, std::uint64_t N, std::size_t count);

std::uint32_t draw_max_geometric(Rng& rng, std::uint64_t N);

/// count draws of S = M_1 + ... + M_K.
std::vector<std::uint64_t> sample_sum_of_maxima(Rng& rng, std::uint64_t N, std::uint64_t K, std::size_t count);

/// Exact E[max of N 1/2-geometrics] = sum_{t>=0} 1 - (1 - 2^-t)^N.
double expected_max_geometric(std::uint64_t N);

/// Parallel time (over all n agents) for a one-agent epidemic to reach every
/// member of the first floor(fraction * n) agents. Only pairs inside that
/// subpopulation transmit.
double measure_epidemic_time(std::size_t n, double subpop_fraction, Rng& rng);

/// Largest number of interactions any single agent takes part in during
/// window_parallel_time * n scheduler draws.
std::uint64_t measure_interaction_counts(std::size_t n, double window_parallel_time, Rng& rng);

/// Number of A agents once A/S partitioning has assigned every agent.
std::size_t measure_partition(std::size_t n, Rng& rng);

/// Worst-case consumption: k of n agents start marked, and every interaction
/// touching a marked agent unmarks it (both if both are marked). Returns the
/// smallest marked count seen over T * n interactions.
std::size_t measure_count_decay(std::size_t n, std::size_t k, double T, Rng& rng);

/// Empirical survival Pr[X >= threshold] with binomial standard errors.
struct EmpiricalTail {
    std::vector<double> thresholds;
    std::vector<double> survival;
    std::vector<double> sigma;                   // sqrt(p (1 - p) / count)
    std::vector<double> confidence_halfwidths;   // 3 sigma
    std::size_t sample_count = 0;

    template <class T>
    static EmpiricalTail from_samples(const std::vector<T>& samples, std::vector<double> thresholds);

    /// Survival probabilities given directly (hits[i] of count samples).
    static EmpiricalTail from_counts(std::vector<double> thresholds, const std::vector<std::size_t>& hits,
                                     std::size_t count);
};

struct ThresholdCheck {
    double threshold = 0.0;
    double empirical = 0.0;
    double slack = 0.0;
    double analytic = 0.0;
    bool pass = false;
};

struct BoundReport {
    std::string bound_name;
    std::string parameters;
    std::vector<ThresholdCheck> checks;
    bool verdict = false;
};

/// A threshold passes when empirical - slack_sigma * sigma <= analytic(threshold).
BoundReport verify_bound(const EmpiricalTail& empirical, const std::function<double(double)>& analytic,
                         double slack_sigma = 3.0, std::string bound_name = {}, std::string parameters = {});

template <class T>
EmpiricalTail EmpiricalTail::from_samples(const std::vector<T>& samples, std::vector<double> thresholds)
{
    std::vector<std::size_t> hits(thresholds.size(), 0);
    for (const T& x : samples) {
        const double v = static_cast<double>(x);
        for (std::size_t i = 0; i < thresholds.size(); ++i)
            if (v >= thresholds[i])
                ++hits[i];
    }
    return from_counts(std::move(thresholds), hits, samples.size());
}

} // namespace popsize::statlab
