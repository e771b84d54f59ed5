#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "popsize/agent.hpp"
#include "popsize/size_estimation.hpp"

namespace popsize::experiments {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum ExitCode : int { exit_ok = 0, exit_verification_failed = 1, exit_usage = 2, exit_io = 3 };

struct ExperimentConfig {
    std::string command;
    std::vector<std::size_t> n_list;
    std::size_t trials = 10;
    std::uint64_t seed = 1;
    Variant variant = Variant::as_randomized;
    std::string profile = "faithful";
    std::optional<std::uint32_t> cte;
    std::optional<std::uint32_t> epoch_mult;
    unsigned jobs = 1;
    std::string out_csv, out_json, out_svg;
    std::uint64_t max_budget = 0;
    std::uint64_t snapshot_every = 0;

    // bounds
    std::string formula;
    std::map<std::string, std::vector<double>> grid;
    // verify
    std::uint64_t samples = 1000000;
    std::uint64_t N = 1024;
    std::uint64_t K = 40;
    double slack_sigma = 3.0;
    // epidemic / decay
    double fraction = 1.0;
    std::optional<std::size_t> k;
    double T = 1.0;
    // leader
    std::uint32_t k2 = 4;
    bool stop_when_converged = false;
    // backup
    bool with_estimate = false;
    double shift = 3.7;

    ProtocolParams protocol() const;
};

/// Parses a command line (argv[0] is the program name). Flags override values
/// from a JSON --config file with the same keys. Throws UsageError.
ExperimentConfig parse_config(int argc, const char* const* argv);

struct ResultRow {
    std::size_t n = 0;
    std::size_t trial = 0;
    std::uint64_t seed = 0;
    bool converged = false;
    double convergence_parallel_time = 0.0;
    std::optional<double> output_value;
    double error = 0.0;
    std::uint64_t restarts = 0;
    std::uint32_t clk_max = 0, gr_max = 0, time_max = 0, epoch_max = 0, sum_max = 0;
    std::size_t role_count_A = 0;
};

extern const char* const csv_header;

ResultRow make_row(const RunResult& r, std::size_t trial);

/// Reals with 6 significant digits.
std::string format_real(double v);

/// Rows sorted by (n, trial), header first, LF endings.
std::string rows_to_csv(std::vector<ResultRow> rows);

struct NSummary {
    std::size_t n = 0;
    std::size_t trials = 0;
    double converged_fraction = 0.0;
    double median_time = 0.0;
    double mean_time = 0.0;
    double max_error = 0.0;
    double mean_error = 0.0;
    double max_clk = 0, max_gr = 0, max_time = 0, max_epoch = 0, max_sum = 0;
};

std::vector<NSummary> summarize(const std::vector<ResultRow>& rows);
std::string summary_json(const std::vector<NSummary>& summary, const ExperimentConfig& config);

/// Scatter of convergence time against log10 n, one circle per converged trial.
std::string scatter_svg(const std::vector<ResultRow>& rows);

double median(std::vector<double> v);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads; results keep index order.
template <class R>
std::vector<R> parallel_map(std::size_t count, unsigned jobs, const std::function<R(std::size_t)>& fn);

/// Trials seeded seed + trial index.
std::vector<RunResult> run_trials(std::size_t n, const ProtocolParams& params, std::uint64_t seed,
                                  std::size_t trials, unsigned jobs, const EstimationOptions& opts = {});

/// Formula names accepted by bounds_table.
std::vector<std::string> bound_formulas();

/// Parameter names a formula takes, in column order.
std::vector<std::string> bound_parameters(const std::string& formula);

/// One CSV row per point of the grid's cartesian product: parameters, value,
/// vacuous flag. Throws UsageError for unknown formulas or missing parameters.
std::string bounds_table(const std::string& formula, const std::map<std::string, std::vector<double>>& grid);

/// Writes `content` to `path`; throws IoError naming the path.
void write_file(const std::string& path, const std::string& content);

/// Full command-line entry point; returns the process exit code.
int cli_main(int argc, const char* const* argv);

template <class R>
std::vector<R> parallel_map(std::size_t count, unsigned jobs, const std::function<R(std::size_t)>& fn)
{
    std::vector<std::optional<R>> slots(count);
    const unsigned workers = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(count)));
    std::vector<std::exception_ptr> errors(workers);
    auto work = [&](unsigned w) {
        try {
            for (std::size_t i = w; i < count; i += workers)
                slots[i] = fn(i);
        } catch (...) {
            errors[w] = std::current_exception();
        }
    };
    if (workers == 1) {
        work(0);
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w)
            pool.emplace_back(work, w);
        for (auto& t : pool)
            t.join();
    }
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
    std::vector<R> out;
    out.reserve(count);
    for (auto& s : slots)
        out.push_back(std::move(*s));
    return out;
}

} // namespace popsize::experiments
