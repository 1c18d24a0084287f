#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "toaloha/analysis.hpp"
#include "toaloha/harness.hpp"
#include "toaloha/validation.hpp"

namespace {

using namespace toaloha;

constexpr int kExitOk = 0;
constexpr int kExitFailed = 1;
constexpr int kExitConfig = 2;

struct Output {
    explicit Output(const std::string& path)
    {
        if (path.empty())
            return;
        file = std::make_unique<std::ofstream>(path);
        if (!*file)
            throw ConfigError("cannot open output '" + path + "'");
    }
    std::ostream& stream() { return file ? *file : std::cout; }
    std::unique_ptr<std::ofstream> file;
};

std::string num(double x)
{
    return harness::csv_number(x);
}

struct AnalyzeArgs {
    std::string formula = "saturated";
    std::int64_t n = 10;
    double p = 0.1;
    int K = 1;
    double alpha = 0.0;
    double eta = 1.0;
    double q = 0.0;
    double nu = 1.0;
};

int cmd_analyze(const AnalyzeArgs& a, const std::string& out_path)
{
    Output out(out_path);
    auto& os = out.stream();
    const SlotConfig cfg = derive_slot_params(a.K, a.alpha);
    os << "quantity,value\n";
    if (a.formula == "saturated") {
        const auto r = analysis::renewal_terms(a.n, a.p, a.K);
        os << "throughput," << num(analysis::throughput_with_misdetection(analysis::PopulationMode::Finite, a.n,
                                                                          a.p, a.q, cfg))
           << "\npr_idle," << num(r.pr_idle) << "\npr_success," << num(r.pr_success) << "\npr_type1,"
           << num(r.pr_type1) << "\npr_type2," << num(r.pr_type2) << '\n';
    } else if (a.formula == "poisson") {
        os << "throughput,"
           << num(analysis::throughput_with_misdetection(analysis::PopulationMode::PoissonLimit, 0, a.eta, a.q, cfg))
           << '\n';
    } else if (a.formula == "bound") {
        os << "upper_bound," << num(analysis::throughput_upper_bound(a.eta)) << '\n';
    } else if (a.formula == "delay") {
        os << "avg_delay," << num(analysis::avg_delay_saturated(a.n, a.p, cfg)) << '\n';
    } else if (a.formula == "optimal-p") {
        const double p = analysis::optimal_p_for_n(a.n, cfg);
        os << "p," << num(p) << "\nthroughput," << num(analysis::throughput_saturated(a.n, p, cfg)) << '\n';
    } else if (a.formula == "threshold") {
        os << "stability_threshold," << num(analysis::stability_threshold(cfg)) << '\n';
    } else if (a.formula == "posterior") {
        const double p = a.p;
        const auto cutoff = static_cast<std::int64_t>(std::ceil(poisson_cutoff(a.nu)));
        const auto post = analysis::collision_posterior(a.nu, p, cutoff);
        os << "mean," << num(post.mean) << "\nclosed_form_mean," << num(post.closed_form_mean)
           << "\nkl_to_poisson," << num(post.kl_to_poisson) << '\n';
    } else {
        throw ConfigError("unknown formula '" + a.formula +
                          "' (saturated, poisson, bound, delay, optimal-p, threshold, posterior)");
    }
    return kExitOk;
}

int cmd_optimize(const std::string& what, const std::vector<int>& Ks, const std::vector<double>& alphas,
                 const std::string& out_path)
{
    Output out(out_path);
    auto& os = out.stream();
    if (what == "kappa") {
        os << "K,kappa,tau_star_over_gamma\n";
        for (int K : Ks) {
            const auto r = analysis::optimal_kappa(K);
            os << K << ',' << num(r.kappa) << ',' << num(r.tau_star) << '\n';
        }
    } else if (what == "alpha") {
        os << "alpha,K,kappa,tau_star\n";
        for (double alpha : alphas) {
            const auto r = analysis::optimal_config_for_alpha(alpha);
            os << num(alpha) << ',' << r.K << ',' << num(r.kappa) << ',' << num(r.tau_star_absolute) << '\n';
        }
    } else {
        throw ConfigError("--what must be kappa or alpha");
    }
    return kExitOk;
}

harness::ExperimentSpec load(const std::string& config, std::optional<std::uint64_t> seed, unsigned threads)
{
    auto spec = harness::load_spec(config);
    if (seed)
        spec.base_seed = *seed;
    if (threads > 0)
        spec.threads = threads;
    return spec;
}

int write_rows(const harness::ExperimentSpec& spec, const std::vector<harness::ResultRow>& rows,
               const std::string& out_path)
{
    Output out(out_path.empty() ? spec.output : out_path);
    harness::write_csv(out.stream(), rows);
    for (const auto& r : rows)
        if (!r.error.empty())
            return kExitFailed;
    return kExitOk;
}

int cmd_simulate(const std::string& config, std::optional<std::uint64_t> seed, const std::string& trace_path,
                 const std::string& out_path)
{
    auto spec = load(config, seed, 0);
    if (spec.scenarios.size() != 1)
        throw ConfigError("simulate needs exactly one scenario (got " + std::to_string(spec.scenarios.size()) +
                          "); use sweep for grids");
    const auto& point = spec.scenarios.front();
    const std::uint64_t s = harness::point_seed(spec.base_seed, 0, 0);
    if (!trace_path.empty()) {
        if (point.fcfs)
            throw ConfigError("--trace is not available for fcfs");
        std::ofstream trace(trace_path);
        if (!trace)
            throw ConfigError("cannot open trace '" + trace_path + "'");
        Scenario sc = point.scenario;
        sc.seed = s;
        simulate(sc, &trace);
    }
    return write_rows(spec, {harness::run_point(point, s, 0)}, out_path);
}

int cmd_sweep(const std::string& config, std::optional<std::uint64_t> seed, unsigned threads,
              const std::string& out_path)
{
    const auto spec = load(config, seed, threads);
    return write_rows(spec, harness::run_experiment(spec), out_path);
}

int cmd_validate(const std::string& filter, std::optional<std::uint64_t> seed, unsigned threads,
                 const std::string& out_path)
{
    validation::Options opt;
    opt.filter = filter;
    if (seed)
        opt.seed = *seed;
    opt.threads = threads;
    validation::select(opt.filter); // reject bad filters before running anything

    Output out(out_path);
    bool all = true;
    int passed = 0;
    const auto results = validation::run(opt);
    for (const auto& r : results) {
        out.stream() << validation::format(r) << '\n' << std::flush;
        all = all && r.passed;
        passed += r.passed ? 1 : 0;
    }
    out.stream() << passed << '/' << results.size() << " criteria passed\n";
    return all ? kExitOk : kExitFailed;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Slotted ALOHA with time offsets: analysis, optimization and simulation"};
    app.require_subcommand(1);

    std::string out_path;
    std::string config;
    std::string filter;
    std::optional<std::uint64_t> seed;
    unsigned threads = 0;

    auto* analyze = app.add_subcommand("analyze", "Evaluate a closed form");
    AnalyzeArgs aa;
    analyze->add_option("--formula", aa.formula,
                        "saturated | poisson | bound | delay | optimal-p | threshold | posterior")
        ->capture_default_str();
    analyze->add_option("--n", aa.n, "population size")->capture_default_str();
    analyze->add_option("--p", aa.p, "transmission probability")->capture_default_str();
    analyze->add_option("-K,--K", aa.K, "number of time offsets")->capture_default_str();
    analyze->add_option("--alpha", aa.alpha, "offset spacing relative to T")->capture_default_str();
    analyze->add_option("--eta", aa.eta, "offered load n*p (Poisson limit)")->capture_default_str();
    analyze->add_option("--q", aa.q, "type-1 misdetection probability")->capture_default_str();
    analyze->add_option("--nu", aa.nu, "prior mean backlog (posterior)")->capture_default_str();
    analyze->add_option("--out", out_path, "output path (default stdout)");

    auto* optimize = app.add_subcommand("optimize", "Optimal kappa per K, or optimal K per alpha");
    std::string what = "kappa";
    std::vector<int> Ks = {1, 2, 4, 8, 16, 32};
    std::vector<double> alphas = {0.01, 0.02, 0.03, 0.04, 0.07, 0.14, 0.21, 0.28, 0.30};
    optimize->add_option("--what", what, "kappa | alpha")->capture_default_str();
    optimize->add_option("-K,--K", Ks, "K values for --what kappa")->delimiter(',');
    optimize->add_option("--alpha", alphas, "alpha values for --what alpha")->delimiter(',');
    optimize->add_option("--out", out_path, "output path (default stdout)");

    auto* sim = app.add_subcommand("simulate", "Run one scenario");
    std::string trace_path;
    sim->add_option("--config", config, "scenario file")->required()->check(CLI::ExistingFile);
    sim->add_option("--seed", seed, "override the base seed");
    sim->add_option("--trace", trace_path, "per-slot CSV trace path");
    sim->add_option("--out", out_path, "output path (default: config output or stdout)");

    auto* sweep = app.add_subcommand("sweep", "Run every grid point of a spec");
    sweep->add_option("--config", config, "experiment file")->required()->check(CLI::ExistingFile);
    sweep->add_option("--seed", seed, "override the base seed");
    sweep->add_option("--threads", threads, "worker threads (0 = all cores)");
    sweep->add_option("--out", out_path, "output path (default: config output or stdout)");

    auto* val = app.add_subcommand("validate", "Run the acceptance suite");
    val->add_option("--filter", filter, "analysis | simulation | comma-separated criterion ids");
    val->add_option("--seed", seed, "base seed");
    val->add_option("--threads", threads, "worker threads (0 = all cores)");
    val->add_option("--out", out_path, "report path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (*analyze)
            return cmd_analyze(aa, out_path);
        if (*optimize)
            return cmd_optimize(what, Ks, alphas, out_path);
        if (*sim)
            return cmd_simulate(config, seed, trace_path, out_path);
        if (*sweep)
            return cmd_sweep(config, seed, threads, out_path);
        if (*val)
            return cmd_validate(filter, seed, threads, out_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFailed;
    }
    return kExitOk;
}
