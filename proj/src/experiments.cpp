#include "popsize/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include "popsize/bounds.hpp"
#include "popsize/statlab.hpp"
#include "popsize/variants.hpp"

namespace popsize::experiments {

using nlohmann::json;

const char* const csv_header = "n,trial,seed,converged,convergence_parallel_time,output_value,error,restarts,"
                               "clk_max,gr_max,time_max,epoch_max,sum_max,role_count_A";

namespace {

const std::vector<std::string> commands = {"simulate", "sweep", "bounds", "verify",
                                           "epidemic", "decay", "backup", "leader"};

struct HelpRequested {
    std::string text;
};

// "1,2,5" or "1:12" or "0.5:3:0.5", comma-separated.
std::vector<double> parse_values(const std::string& text)
{
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty())
            continue;
        std::vector<double> parts;
        std::stringstream is(item);
        std::string p;
        while (std::getline(is, p, ':')) {
            try {
                std::size_t used = 0;
                parts.push_back(std::stod(p, &used));
                if (used != p.size())
                    throw std::invalid_argument(p);
            } catch (const std::exception&) {
                throw UsageError("not a number: '" + p + "'");
            }
        }
        if (parts.size() == 1) {
            out.push_back(parts[0]);
        } else if (parts.size() == 2 || parts.size() == 3) {
            const double step = parts.size() == 3 ? parts[2] : 1.0;
            if (!(step > 0))
                throw UsageError("range step must be positive in '" + item + "'");
            const auto count = static_cast<long>(std::floor((parts[1] - parts[0]) / step + 1e-9));
            for (long i = 0; i <= count; ++i)
                out.push_back(parts[0] + static_cast<double>(i) * step);
        } else {
            throw UsageError("bad range '" + item + "'");
        }
    }
    return out;
}

std::string json_to_arg(const json& v)
{
    if (v.is_string())
        return v.get<std::string>();
    if (v.is_array()) {
        std::string s;
        for (const auto& e : v) {
            if (!s.empty())
                s += ',';
            s += json_to_arg(e);
        }
        return s;
    }
    return v.dump();
}

struct Bindings {
    std::size_t n = 0;
    std::vector<std::size_t> n_list;
    std::string variant = "as";
    std::vector<std::string> params;
    std::optional<std::uint32_t> cte, epoch_mult;
    std::optional<std::size_t> k;
    std::string config_path;
};

std::unique_ptr<CLI::App> build_app(ExperimentConfig& cfg, Bindings& b)
{
    auto app = std::make_unique<CLI::App>("Population-protocol size estimation experiments", "popsize");
    app->require_subcommand(1, 1);
    const std::map<std::string, std::string> about = {
        {"simulate", "run size-estimation trials and write one CSV row per trial"},
        {"sweep", "simulate over a list of population sizes (default 100,1000,10000)"},
        {"bounds", "tabulate an analytic bound over a parameter grid"},
        {"verify", "Monte Carlo checks of the geometric-maximum bounds"},
        {"epidemic", "measure epidemic completion times"},
        {"decay", "measure count decay under worst-case consumption"},
        {"backup", "run the exact backup and report k_ex"},
        {"leader", "run the leader-terminated variant"},
    };
    for (const auto& name : commands) {
        CLI::App* sc = app->add_subcommand(name, about.at(name));
        sc->callback([&cfg, name] { cfg.command = name; });
        sc->add_option("--config", b.config_path, "JSON file with the same keys as the flags");
        sc->add_option("--n", b.n, "population size");
        sc->add_option("--n-list", b.n_list, "comma-separated population sizes")->delimiter(',');
        sc->add_option("--trials", cfg.trials, "trials per n")->capture_default_str();
        sc->add_option("--seed", cfg.seed, "base seed; trial i uses seed + i")->capture_default_str();
        sc->add_option("--variant", b.variant, "as or af")->check(CLI::IsMember({"as", "af"}))->capture_default_str();
        sc->add_option("--cte", b.cte, "epoch length factor (profile default: 140 as, 200 af, 16 fast)");
        sc->add_option("--epoch-mult", b.epoch_mult, "epochs per clk (default 5)");
        sc->add_option("--profile", cfg.profile, "faithful or fast")
            ->check(CLI::IsMember({"faithful", "fast"}))
            ->capture_default_str();
        sc->add_option("--jobs", cfg.jobs, "worker threads across trials")->capture_default_str();
        sc->add_option("--out-csv", cfg.out_csv, "CSV output path");
        sc->add_option("--out-json", cfg.out_json, "JSON summary path");
        sc->add_option("--out-svg", cfg.out_svg, "SVG scatter path");
        sc->add_option("--max-budget", cfg.max_budget, "interaction budget per trial (0: 10^4 n ceil(log2 n)^2)");
        sc->add_option("--snapshot-every", cfg.snapshot_every, "interactions between convergence checks (0: n)");
        if (name == "bounds") {
            sc->add_option("--formula", cfg.formula, "formula name");
            sc->add_option("--param", b.params, "name=values, values like 1,2,3 or 1:12 or 0:1:0.25");
        }
        if (name == "verify") {
            sc->add_option("--samples", cfg.samples, "samples of the maximum")->capture_default_str();
            sc->add_option("--N", cfg.N, "geometrics per maximum")->capture_default_str();
            sc->add_option("--K", cfg.K, "maxima per sum")->capture_default_str();
            sc->add_option("--slack-sigma", cfg.slack_sigma, "binomial slack in standard errors")
                ->capture_default_str();
        }
        if (name == "epidemic")
            sc->add_option("--fraction", cfg.fraction, "subpopulation fraction")->capture_default_str();
        if (name == "decay") {
            sc->add_option("--k", b.k, "initially marked agents (default n)");
            sc->add_option("--T", cfg.T, "parallel time")->capture_default_str();
        }
        if (name == "leader") {
            sc->add_option("--k2", cfg.k2, "leader threshold factor")->capture_default_str();
            sc->add_flag("--stop-when-converged", cfg.stop_when_converged,
                         "end a trial at convergence when no agent has terminated yet");
        }
        if (name == "backup") {
            sc->add_flag("--with-estimate", cfg.with_estimate, "also run the estimator and report the combined bound");
            sc->add_option("--shift", cfg.shift, "shift added to the estimate")->capture_default_str();
        }
    }
    return app;
}

std::vector<std::string> config_args(const std::string& path, CLI::App& sub)
{
    std::ifstream in(path);
    if (!in)
        throw UsageError("cannot read config file " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw UsageError("config file " + path + ": " + e.what());
    }
    if (!j.is_object())
        throw UsageError("config file " + path + " must hold a JSON object");
    std::vector<std::string> args;
    for (const auto& [key, value] : j.items()) {
        if (key == "config")
            throw UsageError("config files cannot nest");
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (!opt)
            throw UsageError("unknown config key '" + key + "' for " + sub.get_name());
        if (opt->count() > 0)
            continue;  // the command line wins
        if (opt->get_items_expected_max() == 0) {
            if (value.is_boolean() && value.get<bool>())
                args.push_back("--" + key);
            continue;
        }
        if (key == "param" && value.is_array()) {
            for (const auto& p : value) {
                args.push_back("--param");
                args.push_back(json_to_arg(p));
            }
            continue;
        }
        args.push_back("--" + key);
        args.push_back(json_to_arg(value));
    }
    return args;
}

void finish_config(ExperimentConfig& cfg, const Bindings& b)
{
    cfg.variant = b.variant == "af" ? Variant::af_synthetic : Variant::as_randomized;
    cfg.cte = b.cte;
    cfg.epoch_mult = b.epoch_mult;
    cfg.k = b.k;
    if (b.n)
        cfg.n_list.push_back(b.n);
    cfg.n_list.insert(cfg.n_list.end(), b.n_list.begin(), b.n_list.end());
    if (cfg.n_list.empty()) {
        if (cfg.command == "sweep")
            cfg.n_list = {100, 1000, 10000};
        else if (cfg.command == "epidemic" || cfg.command == "decay")
            cfg.n_list = {10000};
        else if (cfg.command == "backup" || cfg.command == "leader")
            cfg.n_list = {1000};
        else if (cfg.command == "simulate")
            throw UsageError("simulate needs --n or --n-list");
    }
    if (cfg.trials < 1)
        throw UsageError("--trials must be >= 1");
    if (cfg.jobs < 1)
        throw UsageError("--jobs must be >= 1");
    for (std::size_t n : cfg.n_list)
        if (n < 2)
            throw UsageError("every n must be >= 2, got " + std::to_string(n));
    if (cfg.cte && *cfg.cte < 1)
        throw UsageError("--cte must be >= 1");
    if (cfg.epoch_mult && *cfg.epoch_mult < 1)
        throw UsageError("--epoch-mult must be >= 1");
    if (cfg.command == "bounds") {
        if (cfg.formula.empty())
            throw UsageError("bounds needs --formula; one of the names listed by --formula help");
        for (const auto& p : b.params) {
            const auto eq = p.find('=');
            if (eq == std::string::npos || eq == 0)
                throw UsageError("--param expects name=values, got '" + p + "'");
            auto& vals = cfg.grid[p.substr(0, eq)];
            const auto more = parse_values(p.substr(eq + 1));
            vals.insert(vals.end(), more.begin(), more.end());
        }
    }
    if (cfg.command == "verify" && (cfg.samples < 100 || cfg.N < 50 || cfg.K < 1))
        throw UsageError("verify needs --samples >= 100, --N >= 50, --K >= 1");
    if (cfg.command == "epidemic" && !(cfg.fraction > 0 && cfg.fraction <= 1))
        throw UsageError("--fraction must lie in (0, 1]");
    if (cfg.command == "decay") {
        if (cfg.T < 0)
            throw UsageError("--T must be >= 0");
        for (std::size_t n : cfg.n_list)
            if (cfg.k && *cfg.k > n)
                throw UsageError("--k must be <= n");
    }
    if (cfg.command == "leader" && cfg.k2 < 1)
        throw UsageError("--k2 must be >= 1");
}

} // namespace

ProtocolParams ExperimentConfig::protocol() const
{
    ProtocolParams p = profile == "fast" ? ProtocolParams::fast(variant) : ProtocolParams::faithful(variant);
    if (cte)
        p.cte = *cte;
    if (epoch_mult)
        p.epoch_multiplier = *epoch_mult;
    return p;
}

ExperimentConfig parse_config(int argc, const char* const* argv)
{
    std::vector<std::string> args;
    for (int i = argc - 1; i >= 1; --i)
        args.emplace_back(argv[i]);  // CLI11 takes the vector reversed

    auto parse = [](ExperimentConfig& cfg, Bindings& b, std::vector<std::string> a) {
        auto app = build_app(cfg, b);
        try {
            app->parse(a);
        } catch (const CLI::CallForHelp&) {
            CLI::App* sub = nullptr;
            for (auto* s : app->get_subcommands())
                sub = s;
            throw HelpRequested{sub ? sub->help() : app->help()};
        } catch (const CLI::CallForAllHelp&) {
            throw HelpRequested{app->help("", CLI::AppFormatMode::All)};
        } catch (const CLI::ParseError& e) {
            throw UsageError(e.what());
        }
        return app;
    };

    ExperimentConfig cfg;
    Bindings b;
    auto app = parse(cfg, b, args);
    if (!b.config_path.empty()) {
        CLI::App* sub = app->get_subcommands().front();
        const auto extra = config_args(b.config_path, *sub);
        // Config tokens go right after the subcommand name.
        std::vector<std::string> forward(args.rbegin(), args.rend());
        const auto sub_pos = static_cast<std::size_t>(
            std::find(forward.begin(), forward.end(), sub->get_name()) - forward.begin());
        std::vector<std::string> ordered(forward.begin(), forward.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1);
        ordered.insert(ordered.end(), extra.begin(), extra.end());
        ordered.insert(ordered.end(), forward.begin() + static_cast<std::ptrdiff_t>(sub_pos) + 1, forward.end());
        cfg = ExperimentConfig{};
        b = Bindings{};
        app = parse(cfg, b, std::vector<std::string>(ordered.rbegin(), ordered.rend()));
    }
    finish_config(cfg, b);
    return cfg;
}

ResultRow make_row(const RunResult& r, std::size_t trial)
{
    ResultRow row;
    row.n = r.n;
    row.trial = trial;
    row.seed = r.seed;
    row.converged = r.converged;
    row.convergence_parallel_time = r.convergence_parallel_time;
    if (r.output)
        row.output_value = r.output->value();
    row.error = r.error;
    row.restarts = r.restart_count;
    row.clk_max = r.field_ranges.clk;
    row.gr_max = r.field_ranges.gr;
    row.time_max = r.field_ranges.time;
    row.epoch_max = r.field_ranges.epoch;
    row.sum_max = r.field_ranges.sum;
    row.role_count_A = r.role_count_a;
    return row;
}

std::string format_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string rows_to_csv(std::vector<ResultRow> rows)
{
    std::sort(rows.begin(), rows.end(),
              [](const ResultRow& a, const ResultRow& b) { return std::tie(a.n, a.trial) < std::tie(b.n, b.trial); });
    std::string out = csv_header;
    out += '\n';
    for (const auto& r : rows) {
        out += std::to_string(r.n) + ',' + std::to_string(r.trial) + ',' + std::to_string(r.seed) + ',' +
               (r.converged ? "1" : "0") + ',' + format_real(r.convergence_parallel_time) + ',' +
               (r.output_value ? format_real(*r.output_value) : std::string()) + ',' + format_real(r.error) + ',' +
               std::to_string(r.restarts) + ',' + std::to_string(r.clk_max) + ',' + std::to_string(r.gr_max) + ',' +
               std::to_string(r.time_max) + ',' + std::to_string(r.epoch_max) + ',' + std::to_string(r.sum_max) +
               ',' + std::to_string(r.role_count_A) + '\n';
    }
    return out;
}

double median(std::vector<double> v)
{
    if (v.empty())
        return std::nan("");
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

std::vector<NSummary> summarize(const std::vector<ResultRow>& rows)
{
    std::map<std::size_t, std::vector<const ResultRow*>> by_n;
    for (const auto& r : rows)
        by_n[r.n].push_back(&r);
    std::vector<NSummary> out;
    for (const auto& [n, rs] : by_n) {
        NSummary s;
        s.n = n;
        s.trials = rs.size();
        std::vector<double> times;
        double err_sum = 0.0;
        std::size_t conv = 0;
        for (const ResultRow* r : rs) {
            if (r->converged) {
                ++conv;
                times.push_back(r->convergence_parallel_time);
            }
            s.max_error = std::max(s.max_error, r->error);
            err_sum += r->error;
            s.max_clk = std::max<double>(s.max_clk, r->clk_max);
            s.max_gr = std::max<double>(s.max_gr, r->gr_max);
            s.max_time = std::max<double>(s.max_time, r->time_max);
            s.max_epoch = std::max<double>(s.max_epoch, r->epoch_max);
            s.max_sum = std::max<double>(s.max_sum, r->sum_max);
        }
        s.converged_fraction = static_cast<double>(conv) / static_cast<double>(rs.size());
        s.median_time = median(times);
        s.mean_time = times.empty() ? std::nan("")
                                    : std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
        s.mean_error = err_sum / static_cast<double>(rs.size());
        out.push_back(s);
    }
    return out;
}

namespace {

json real_or_null(double v)
{
    if (std::isfinite(v))
        return v;
    return nullptr;
}

json config_json(const ExperimentConfig& cfg)
{
    const ProtocolParams p = cfg.protocol();
    return json{{"command", cfg.command},
                {"n_list", cfg.n_list},
                {"trials", cfg.trials},
                {"seed", cfg.seed},
                {"variant", cfg.variant == Variant::af_synthetic ? "af" : "as"},
                {"profile", cfg.profile},
                {"cte", p.cte},
                {"epoch_multiplier", p.epoch_multiplier}};
}

} // namespace

std::string summary_json(const std::vector<NSummary>& summary, const ExperimentConfig& config)
{
    json per_n = json::array();
    for (const auto& s : summary) {
        per_n.push_back(json{{"n", s.n},
                             {"trials", s.trials},
                             {"converged_fraction", s.converged_fraction},
                             {"median_convergence_parallel_time", real_or_null(s.median_time)},
                             {"mean_convergence_parallel_time", real_or_null(s.mean_time)},
                             {"max_error", real_or_null(s.max_error)},
                             {"mean_error", real_or_null(s.mean_error)},
                             {"clk_max", s.max_clk},
                             {"gr_max", s.max_gr},
                             {"time_max", s.max_time},
                             {"epoch_max", s.max_epoch},
                             {"sum_max", s.max_sum}});
    }
    json j = config_json(config);
    j["summary"] = per_n;
    return j.dump(2) + "\n";
}

std::string scatter_svg(const std::vector<ResultRow>& rows)
{
    const double W = 640, H = 420, left = 70, right = 20, top = 20, bottom = 50;
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows)
        if (r.converged)
            pts.emplace_back(std::log10(static_cast<double>(r.n)), r.convergence_parallel_time);
    double xmin = 1, xmax = 5, ymax = 1;
    if (!pts.empty()) {
        xmin = xmax = pts[0].first;
        for (const auto& [x, y] : pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymax = std::max(ymax, y);
        }
        xmin = std::floor(xmin - 0.25);
        xmax = std::ceil(xmax + 0.25);
    }
    ymax *= 1.1;
    auto X = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (W - left - right); };
    auto Y = [&](double y) { return H - bottom - y / ymax * (H - top - bottom); };
    auto f2 = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.2f", v);
        return std::string(buf);
    };

    std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f2(W) + "\" height=\"" + f2(H) + "\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<line x1=\"" + f2(left) + "\" y1=\"" + f2(H - bottom) + "\" x2=\"" + f2(W - right) + "\" y2=\"" +
         f2(H - bottom) + "\" stroke=\"black\"/>\n";
    s += "<line x1=\"" + f2(left) + "\" y1=\"" + f2(top) + "\" x2=\"" + f2(left) + "\" y2=\"" + f2(H - bottom) +
         "\" stroke=\"black\"/>\n";
    for (double x = xmin; x <= xmax + 1e-9; x += 1) {
        s += "<text x=\"" + f2(X(x)) + "\" y=\"" + f2(H - bottom + 18) +
             "\" font-size=\"12\" text-anchor=\"middle\">10^" + std::to_string(static_cast<int>(x)) + "</text>\n";
    }
    for (int i = 0; i <= 4; ++i) {
        const double y = ymax * i / 4;
        s += "<text x=\"" + f2(left - 6) + "\" y=\"" + f2(Y(y) + 4) + "\" font-size=\"12\" text-anchor=\"end\">" +
             format_real(y) + "</text>\n";
    }
    s += "<text x=\"" + f2((left + W - right) / 2) + "\" y=\"" + f2(H - 10) +
         "\" font-size=\"13\" text-anchor=\"middle\">population size n</text>\n";
    s += "<text x=\"16\" y=\"" + f2((top + H - bottom) / 2) + "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
         f2((top + H - bottom) / 2) + ")\">convergence time</text>\n";
    for (const auto& [x, y] : pts)
        s += "<circle cx=\"" + f2(X(x)) + "\" cy=\"" + f2(Y(y)) + "\" r=\"3\" fill=\"steelblue\"/>\n";
    s += "</svg>\n";
    return s;
}

std::vector<RunResult> run_trials(std::size_t n, const ProtocolParams& params, std::uint64_t seed,
                                  std::size_t trials, unsigned jobs, const EstimationOptions& opts)
{
    return parallel_map<RunResult>(trials, jobs, [&](std::size_t t) {
        return run_size_estimation(n, params, seed + t, opts);
    });
}

// Bounds table ---------------------------------------------------------------

namespace {

using Formula = std::function<bounds::BoundValue(const std::map<std::string, double>&)>;

struct FormulaSpec {
    std::vector<std::string> params;
    Formula eval;
};

std::uint64_t as_count(double v, const char* name)
{
    if (v < 0 || v != std::floor(v))
        throw UsageError(std::string(name) + " must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

bounds::BoundValue plain(double v) { return bounds::BoundValue::of(v); }

const std::map<std::string, FormulaSpec>& formulas()
{
    using namespace bounds;
    using P = std::map<std::string, double>;
    static const std::map<std::string, FormulaSpec> table = {
        {"harmonic", {{"n"}, [](const P& p) { return BoundValue{harmonic(as_count(p.at("n"), "n")), false}; }}},
        {"subexp_mgf_bound",
         {{"alpha", "beta", "s"},
          [](const P& p) { return BoundValue{subexp_mgf_bound({p.at("alpha"), p.at("beta")}, p.at("s")), false}; }}},
        {"chernoff_sum_bound",
         {{"alpha", "beta", "K", "t"},
          [](const P& p) {
              return chernoff_sum_bound({p.at("alpha"), p.at("beta")}, as_count(p.at("K"), "K"), p.at("t"));
          }}},
        {"expected_max_interval_low",
         {{"N", "q"},
          [](const P& p) {
              return BoundValue{expected_max_interval(as_count(p.at("N"), "N"), p.at("q")).first, false};
          }}},
        {"expected_max_interval_high",
         {{"N", "q"},
          [](const P& p) {
              return BoundValue{expected_max_interval(as_count(p.at("N"), "N"), p.at("q")).second, false};
          }}},
        {"max_geom_lower_tail", {{"q", "lambda"}, [](const P& p) { return max_geom_lower_tail(p.at("q"), p.at("lambda")); }}},
        {"max_geom_upper_tail", {{"q", "lambda"}, [](const P& p) { return max_geom_upper_tail(p.at("q"), p.at("lambda")); }}},
        {"half_geom_subexp_tail", {{"lambda"}, [](const P& p) { return half_geom_subexp_tail(p.at("lambda")); }}},
        {"max_geom_range_tails",
         {{"N"}, [](const P& p) { return plain(max_geom_range_tails(as_count(p.at("N"), "N")).first); }}},
        {"sum_maxima_tail", {{"K", "t"}, [](const P& p) { return sum_maxima_tail(as_count(p.at("K"), "K"), p.at("t")); }}},
        {"average_estimate_tail",
         {{"N", "K"},
          [](const P& p) { return plain(average_estimate_tail(as_count(p.at("N"), "N"), as_count(p.at("K"), "K"))); }}},
        {"epidemic_tail", {{"n", "alpha_u"}, [](const P& p) { return epidemic_tail(p.at("n"), p.at("alpha_u")); }}},
        {"partial_epidemic_tail",
         {{"a", "c", "alpha_u"},
          [](const P& p) { return partial_epidemic_tail(p.at("a"), p.at("c"), p.at("alpha_u")); }}},
        {"partial_epidemic_c3_tail", {{"n"}, [](const P& p) { return plain(partial_epidemic_c3_tail(p.at("n"))); }}},
        {"interaction_count_bound",
         {{"C", "n"}, [](const P& p) { return BoundValue{interaction_count_bound(p.at("C"), p.at("n")).D, false}; }}},
        {"partition_tail", {{"n", "a"}, [](const P& p) { return partition_tail(p.at("n"), p.at("a")); }}},
        {"balls_bins_decay_bound",
         {{"k", "delta", "m", "n"},
          [](const P& p) { return balls_bins_decay_bound(p.at("k"), p.at("delta"), p.at("m"), p.at("n")); }}},
        {"count_decay_bound",
         {{"k", "delta", "T"}, [](const P& p) { return count_decay_bound(p.at("k"), p.at("delta"), p.at("T")); }}},
    };
    return table;
}

std::string join(const std::vector<std::string>& v, const char* sep)
{
    std::string s;
    for (const auto& x : v) {
        if (!s.empty())
            s += sep;
        s += x;
    }
    return s;
}

} // namespace

std::vector<std::string> bound_formulas()
{
    std::vector<std::string> names;
    for (const auto& [name, spec] : formulas())
        names.push_back(name);
    return names;
}

std::vector<std::string> bound_parameters(const std::string& formula)
{
    const auto it = formulas().find(formula);
    if (it == formulas().end())
        throw UsageError("unknown formula '" + formula + "'; valid names: " + join(bound_formulas(), ", "));
    return it->second.params;
}

std::string bounds_table(const std::string& formula, const std::map<std::string, std::vector<double>>& grid)
{
    const auto names = bound_parameters(formula);
    for (const auto& [key, vals] : grid)
        if (std::find(names.begin(), names.end(), key) == names.end())
            throw UsageError("formula " + formula + " has no parameter '" + key + "'; it takes " + join(names, ", "));
    for (const auto& name : names)
        if (!grid.count(name))
            throw UsageError("formula " + formula + " needs --param " + name + "=...; it takes " + join(names, ", "));

    std::string out = join(names, ",") + ",value,vacuous\n";
    std::size_t total = 1;
    for (const auto& name : names)
        total *= grid.at(name).size();
    const Formula& eval = formulas().at(formula).eval;
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::map<std::string, double> point;
        std::size_t rest = idx;
        // Last parameter varies fastest.
        for (auto it = names.rbegin(); it != names.rend(); ++it) {
            const auto& vals = grid.at(*it);
            point[*it] = vals[rest % vals.size()];
            rest /= vals.size();
        }
        bounds::BoundValue v;
        try {
            v = eval(point);
        } catch (const bounds::OutOfDomain& e) {
            throw UsageError(formula + ": " + e.what());
        }
        for (const auto& name : names)
            out += format_real(point[name]) + ',';
        out += format_real(v.value) + ',' + (v.vacuous ? "1" : "0") + '\n';
    }
    return out;
}

void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot open " + path + " for writing");
    out << content;
    out.close();
    if (!out)
        throw IoError("failed writing " + path);
}

// Commands -------------------------------------------------------------------

namespace {

struct Outputs {
    std::string csv, json, svg;
    std::string report;   // human-readable summary for stdout
    bool verification_failed = false;
};

Outputs cmd_simulate(const ExperimentConfig& cfg)
{
    const ProtocolParams params = cfg.protocol();
    EstimationOptions opts;
    opts.max_interactions = cfg.max_budget;
    opts.snapshot_every = cfg.snapshot_every;
    std::vector<ResultRow> rows;
    for (std::size_t n : cfg.n_list) {
        const auto results = run_trials(n, params, cfg.seed, cfg.trials, cfg.jobs, opts);
        for (std::size_t t = 0; t < results.size(); ++t)
            rows.push_back(make_row(results[t], t));
    }
    Outputs o;
    o.csv = rows_to_csv(rows);
    const auto summary = summarize(rows);
    o.json = summary_json(summary, cfg);
    o.svg = scatter_svg(rows);
    for (const auto& s : summary) {
        o.report += "n=" + std::to_string(s.n) + " trials=" + std::to_string(s.trials) +
                    " converged=" + format_real(s.converged_fraction) + " median_time=" + format_real(s.median_time) +
                    " mean_time=" + format_real(s.mean_time) + " max_error=" + format_real(s.max_error) + "\n";
    }
    return o;
}

Outputs cmd_bounds(const ExperimentConfig& cfg)
{
    Outputs o;
    o.csv = bounds_table(cfg.formula, cfg.grid);
    json j{{"command", "bounds"}, {"formula", cfg.formula}, {"parameters", bound_parameters(cfg.formula)}};
    json rows = json::array();
    std::stringstream ss(o.csv);
    std::string line;
    std::getline(ss, line);
    while (std::getline(ss, line))
        rows.push_back(line);
    j["rows"] = rows;
    o.json = j.dump(2) + "\n";
    return o;
}

struct CheckRow {
    std::string bound, parameters;
    double threshold, empirical, slack, analytic;
    bool pass;
};

void add_report(std::vector<CheckRow>& rows, const statlab::BoundReport& r)
{
    for (const auto& c : r.checks)
        rows.push_back({r.bound_name, r.parameters, c.threshold, c.empirical, c.slack, c.analytic, c.pass});
}

Outputs cmd_verify(const ExperimentConfig& cfg)
{
    using namespace statlab;
    Rng rng(cfg.seed);
    const std::uint64_t N = cfg.N;
    const auto samples = sample_max_geometric(rng, N, cfg.samples);
    const double EM = expected_max_geometric(N);
    const std::string pN = "N=" + std::to_string(N) + " samples=" + std::to_string(cfg.samples);
    std::vector<CheckRow> rows;

    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    double ss = 0.0;
    for (auto m : samples)
        ss += (m - mean) * (m - mean);
    const double count = static_cast<double>(samples.size());
    const double se = count > 1 ? std::sqrt(ss / (count - 1) / count) : 0.0;
    const double slack = cfg.slack_sigma * se;
    const auto [lo, hi] = bounds::expected_max_interval(N, 0.5);
    rows.push_back({"expected_max_interval", pN + " (threshold=low analytic=high)", lo, mean, slack, hi,
                    lo - slack < mean && mean < hi + slack});

    std::vector<double> lambdas;
    for (int l = 1; l <= 12; ++l)
        lambdas.push_back(l);
    std::vector<double> dev(samples.size()), up(samples.size()), down(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        dev[i] = std::abs(samples[i] - EM);
        up[i] = samples[i] - EM;
        down[i] = EM - samples[i];
    }
    add_report(rows, verify_bound(EmpiricalTail::from_samples(dev, lambdas),
                                  [](double l) { return bounds::half_geom_subexp_tail(l).value; }, cfg.slack_sigma,
                                  "half_geom_subexp_tail", pN));
    add_report(rows, verify_bound(EmpiricalTail::from_samples(up, lambdas),
                                  [](double l) { return bounds::max_geom_upper_tail(0.5, l).value; },
                                  cfg.slack_sigma, "max_geom_upper_tail", pN));
    add_report(rows, verify_bound(EmpiricalTail::from_samples(down, std::vector<double>(lambdas.begin(), lambdas.begin() + 8)),
                                  [](double l) { return bounds::max_geom_lower_tail(0.5, l).value; },
                                  cfg.slack_sigma, "max_geom_lower_tail", pN));

    const double lgN = std::log2(static_cast<double>(N));
    const double high_cut = 2 * lgN, low_cut = lgN - std::log2(std::log(static_cast<double>(N)));
    std::size_t high = 0, low = 0;
    for (auto m : samples) {
        high += m >= high_cut;
        low += m <= low_cut;
    }
    const double two_over_N = 2.0 / static_cast<double>(N);
    add_report(rows, verify_bound(EmpiricalTail::from_counts({high_cut}, {high}, samples.size()),
                                  [&](double) { return two_over_N; }, cfg.slack_sigma, "range_tail_high",
                                  pN + " event=M>=2logN analytic=2/N"));
    add_report(rows, verify_bound(EmpiricalTail::from_counts({low_cut}, {low}, samples.size()),
                                  [&](double) { return two_over_N; }, cfg.slack_sigma, "range_tail_low",
                                  pN + " event=M<=logN-log(lnN) analytic=2/N"));

    const std::size_t sums = std::max<std::size_t>(1, cfg.samples / 100);
    const auto S = sample_sum_of_maxima(rng, N, cfg.K, sums);
    std::size_t far = 0;
    for (auto s : S)
        far += std::abs(static_cast<double>(s) / static_cast<double>(cfg.K) - lgN) >= 4.7;
    const double avg_bound = static_cast<double>(cfg.K) >= 4 * lgN ? bounds::average_estimate_tail(N, cfg.K) : 1.0;
    add_report(rows, verify_bound(EmpiricalTail::from_counts({4.7}, {far}, S.size()),
                                  [&](double) { return avg_bound; }, cfg.slack_sigma, "average_estimate_tail",
                                  "N=" + std::to_string(N) + " K=" + std::to_string(cfg.K) +
                                      " sums=" + std::to_string(S.size())));

    double mgf = 0.0;
    for (auto m : samples)
        mgf += std::exp(0.25 * (m - EM));
    mgf /= static_cast<double>(samples.size());
    const double mgf_bound = bounds::subexp_mgf_bound({3.31, 2.0}, 0.25);
    rows.push_back({"subexp_mgf_bound", pN + " s=0.25", 0.25, mgf, 0.0, mgf_bound, mgf <= mgf_bound});

    Outputs o;
    o.csv = "bound,parameters,threshold,empirical,slack,analytic,pass\n";
    json reports = json::array();
    std::map<std::string, bool> verdicts;
    std::vector<std::string> order;
    for (const auto& r : rows) {
        o.csv += r.bound + ",\"" + r.parameters + "\"," + format_real(r.threshold) + ',' + format_real(r.empirical) +
                 ',' + format_real(r.slack) + ',' + format_real(r.analytic) + ',' + (r.pass ? "1" : "0") + '\n';
        if (!verdicts.count(r.bound)) {
            order.push_back(r.bound);
            verdicts[r.bound] = true;
        }
        verdicts[r.bound] = verdicts[r.bound] && r.pass;
    }
    bool all = true;
    for (const auto& name : order) {
        reports.push_back(json{{"bound", name}, {"verdict", verdicts[name]}});
        all = all && verdicts[name];
        o.report += name + ": " + (verdicts[name] ? "pass" : "FAIL") + "\n";
    }
    o.json = json{{"command", "verify"}, {"seed", cfg.seed}, {"N", N}, {"samples", cfg.samples}, {"K", cfg.K},
                  {"slack_sigma", cfg.slack_sigma}, {"reports", reports}, {"all_pass", all}}
                 .dump(2) +
             "\n";
    o.verification_failed = !all;
    return o;
}

Outputs cmd_epidemic(const ExperimentConfig& cfg)
{
    Outputs o;
    o.csv = "n,fraction,trial,seed,parallel_time\n";
    json per_n = json::array();
    for (std::size_t n : cfg.n_list) {
        const auto times = parallel_map<double>(cfg.trials, cfg.jobs, [&](std::size_t t) {
            Rng rng(cfg.seed + t);
            return statlab::measure_epidemic_time(n, cfg.fraction, rng);
        });
        for (std::size_t t = 0; t < times.size(); ++t)
            o.csv += std::to_string(n) + ',' + format_real(cfg.fraction) + ',' + std::to_string(t) + ',' +
                     std::to_string(cfg.seed + t) + ',' + format_real(times[t]) + '\n';
        const double mean = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
        const double ln_n = std::log(static_cast<double>(n));
        const double mx = *std::max_element(times.begin(), times.end());
        json s{{"n", n}, {"trials", times.size()}, {"mean_parallel_time", mean}, {"max_parallel_time", mx},
               {"max_over_ln_n", mx / ln_n}};
        if (cfg.fraction == 1.0)
            s["expected_parallel_time"] = (static_cast<double>(n) - 1) / static_cast<double>(n) * bounds::harmonic(n - 1);
        per_n.push_back(s);
        o.report += "n=" + std::to_string(n) + " mean=" + format_real(mean) + " max=" + format_real(mx) + "\n";
    }
    json j{{"command", "epidemic"}, {"seed", cfg.seed}, {"fraction", cfg.fraction}, {"summary", per_n}};
    o.json = j.dump(2) + "\n";
    return o;
}

Outputs cmd_decay(const ExperimentConfig& cfg)
{
    Outputs o;
    o.csv = "n,k,T,trial,seed,min_count\n";
    json per_n = json::array();
    for (std::size_t n : cfg.n_list) {
        const std::size_t k = cfg.k.value_or(n);
        const auto mins = parallel_map<std::size_t>(cfg.trials, cfg.jobs, [&](std::size_t t) {
            Rng rng(cfg.seed + t);
            return statlab::measure_count_decay(n, k, cfg.T, rng);
        });
        for (std::size_t t = 0; t < mins.size(); ++t)
            o.csv += std::to_string(n) + ',' + std::to_string(k) + ',' + format_real(cfg.T) + ',' + std::to_string(t) +
                     ',' + std::to_string(cfg.seed + t) + ',' + std::to_string(mins[t]) + '\n';
        const std::size_t lowest = *std::min_element(mins.begin(), mins.end());
        per_n.push_back(json{{"n", n}, {"k", k}, {"T", cfg.T}, {"trials", mins.size()}, {"min_count", lowest},
                             {"min_fraction", static_cast<double>(lowest) / static_cast<double>(k ? k : 1)}});
        o.report += "n=" + std::to_string(n) + " k=" + std::to_string(k) + " min=" + std::to_string(lowest) + "\n";
    }
    o.json = json{{"command", "decay"}, {"seed", cfg.seed}, {"summary", per_n}}.dump(2) + "\n";
    return o;
}

Outputs cmd_backup(const ExperimentConfig& cfg)
{
    struct Trial {
        BackupResult backup;
        std::optional<RunResult> est;
    };
    const ProtocolParams params = cfg.protocol();
    Outputs o;
    o.csv = "n,trial,seed,stabilized,k_ex,stabilization_parallel_time,l_agents";
    if (cfg.with_estimate)
        o.csv += ",estimate,combined";
    o.csv += '\n';
    json per_n = json::array();
    for (std::size_t n : cfg.n_list) {
        const auto trials = parallel_map<Trial>(cfg.trials, cfg.jobs, [&](std::size_t t) {
            Trial tr{run_backup(n, cfg.seed + t, cfg.max_budget), std::nullopt};
            if (cfg.with_estimate) {
                EstimationOptions opts;
                opts.max_interactions = cfg.max_budget;
                tr.est = run_size_estimation(n, params, cfg.seed + t, opts);
            }
            return tr;
        });
        std::size_t stable = 0;
        std::map<std::uint32_t, std::size_t> k_hist;
        for (std::size_t t = 0; t < trials.size(); ++t) {
            const auto& b = trials[t].backup;
            stable += b.stabilized;
            ++k_hist[b.k_ex];
            o.csv += std::to_string(n) + ',' + std::to_string(t) + ',' + std::to_string(b.seed) + ',' +
                     (b.stabilized ? "1" : "0") + ',' + std::to_string(b.k_ex) + ',' + format_real(b.parallel_time) +
                     ',' + std::to_string(b.l_agents);
            if (cfg.with_estimate) {
                const auto& e = *trials[t].est;
                if (e.output)
                    o.csv += ',' + format_real(e.output->value()) + ',' +
                             std::to_string(combined_upper_bound(e.output->value(), b.k_ex, cfg.shift));
                else
                    o.csv += ",," + std::to_string(b.k_ex);
            }
            o.csv += '\n';
        }
        json hist = json::object();
        for (const auto& [k, c] : k_hist)
            hist[std::to_string(k)] = c;
        per_n.push_back(json{{"n", n}, {"trials", trials.size()}, {"stabilized", stable}, {"k_ex_counts", hist}});
        o.report += "n=" + std::to_string(n) + " stabilized=" + std::to_string(stable) + "/" +
                    std::to_string(trials.size()) + "\n";
    }
    o.json = json{{"command", "backup"}, {"seed", cfg.seed}, {"summary", per_n}}.dump(2) + "\n";
    return o;
}

Outputs cmd_leader(const ExperimentConfig& cfg)
{
    LeaderParams lp;
    lp.protocol = cfg.protocol();
    lp.k2 = cfg.k2;
    Outputs o;
    o.csv = "n,trial,seed,terminated,converged_at_termination,converged_first,stop_parallel_time,output_value,"
            "contract_violation\n";
    json per_n = json::array();
    for (std::size_t n : cfg.n_list) {
        const auto res = parallel_map<LeaderResult>(cfg.trials, cfg.jobs, [&](std::size_t t) {
            return run_leader(n, lp, cfg.seed + t, cfg.max_budget, cfg.stop_when_converged);
        });
        std::size_t good = 0;
        for (std::size_t t = 0; t < res.size(); ++t) {
            const auto& r = res[t];
            good += terminated_after_convergence(r);
            o.csv += std::to_string(n) + ',' + std::to_string(t) + ',' + std::to_string(r.seed) + ',' +
                     (r.terminated ? "1" : "0") + ',' + (r.converged_at_termination ? "1" : "0") + ',' +
                     (r.converged_first ? "1" : "0") + ',' +
                     format_real(r.termination_parallel_time) + ',' +
                     (r.output ? format_real(r.output->value()) : std::string()) + ',' +
                     (r.contract_violation ? "1" : "0") + '\n';
        }
        per_n.push_back(json{{"n", n}, {"trials", res.size()}, {"terminated_after_convergence", good},
                             {"fraction", static_cast<double>(good) / static_cast<double>(res.size())}});
        o.report += "n=" + std::to_string(n) + " terminated after convergence: " + std::to_string(good) + "/" +
                    std::to_string(res.size()) + "\n";
    }
    json j = config_json(cfg);
    j["k2"] = cfg.k2;
    j["summary"] = per_n;
    o.json = j.dump(2) + "\n";
    return o;
}

} // namespace

int cli_main(int argc, const char* const* argv)
{
    ExperimentConfig cfg;
    try {
        cfg = parse_config(argc, argv);
    } catch (const HelpRequested& h) {
        std::cout << h.text;
        return exit_ok;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    }

    Outputs out;
    try {
        if (cfg.command == "simulate" || cfg.command == "sweep")
            out = cmd_simulate(cfg);
        else if (cfg.command == "bounds")
            out = cmd_bounds(cfg);
        else if (cfg.command == "verify")
            out = cmd_verify(cfg);
        else if (cfg.command == "epidemic")
            out = cmd_epidemic(cfg);
        else if (cfg.command == "decay")
            out = cmd_decay(cfg);
        else if (cfg.command == "backup")
            out = cmd_backup(cfg);
        else
            out = cmd_leader(cfg);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return exit_usage;
    }

    int code = out.verification_failed ? exit_verification_failed : exit_ok;
    auto emit = [&](const std::string& path, const std::string& content) {
        if (path.empty() || content.empty())
            return;
        try {
            write_file(path, content);
        } catch (const IoError& e) {
            std::cerr << "i/o error: " << e.what() << "\n";
            code = exit_io;
        }
    };
    if (cfg.out_csv.empty())
        std::cout << out.csv;
    emit(cfg.out_csv, out.csv);
    emit(cfg.out_json, out.json);
    emit(cfg.out_svg, out.svg);
    std::cout << out.report;
    return code;
}

} // namespace popsize::experiments
