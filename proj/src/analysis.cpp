#include "toaloha/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <utility>

namespace toaloha::analysis {

namespace {

struct Maximum {
    double arg;
    double value;
};

// Coarse grid to find the bracket, then golden-section inside it.
Maximum grid_golden_max(const std::function<double(double)>& f, const std::vector<double>& grid,
                        double tol)
{
    std::size_t best = 0;
    std::vector<double> values(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        values[i] = f(grid[i]);
        if (values[i] > values[best])
            best = i;
    }

    double a = grid[best == 0 ? 0 : best - 1];
    double b = grid[std::min(best + 1, grid.size() - 1)];
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > tol) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }

    Maximum out{grid[best], values[best]};
    for (double x : {a, b, 0.5 * (a + b)}) {
        const double v = f(x);
        if (v > out.value)
            out = {x, v};
    }
    return out;
}

std::vector<double> linear_grid(double lo, double hi, int points)
{
    std::vector<double> g(points);
    for (int i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * i / (points - 1);
    return g;
}

std::vector<double> log_grid(double lo, double hi, int points)
{
    std::vector<double> g(points);
    const double llo = std::log(lo);
    const double lhi = std::log(hi);
    for (int i = 0; i < points; ++i)
        g[i] = std::exp(llo + (lhi - llo) * i / (points - 1));
    g.back() = hi;
    return g;
}

constexpr int kGridPoints = 41;

// resolution_factor(K, i) = sum_{j=1}^{K-1} (K-j)^{i-1} / K^i, the probability
// that a given one of i packets is alone at the earliest used TO (excluding
// the case where all share that TO). Cached per thread since it only depends
// on (K, i).
double resolution_factor(int K, std::int64_t i)
{
    thread_local std::unordered_map<int, std::vector<double>> cache;
    auto& table = cache[K];
    if (table.empty())
        table = {0.0, 0.0}; // i = 0, 1 unused

    if (static_cast<std::int64_t>(table.size()) <= i) {
        if (table.back() == 0.0 && table.size() > 2)
            return 0.0;
        const auto start = static_cast<std::int64_t>(table.size());
        for (std::int64_t k = start; k <= i; ++k) {
            double sum = 0.0;
            for (int m = 1; m < K; ++m)
                sum += std::pow(static_cast<double>(m) / K, static_cast<double>(k - 1));
            const double v = sum / K;
            table.push_back(v);
            if (v == 0.0)
                return 0.0;
        }
    }
    return table[static_cast<std::size_t>(i)];
}

// Visits B_i^n(p) for every i carrying non-negligible mass, starting from
// the mode and walking outward with the ratio recurrence.
template <typename Fn>
void for_each_binomial(std::int64_t n, double p, Fn&& fn)
{
    if (p == 0.0) {
        fn(0, 1.0);
        return;
    }
    if (p == 1.0) {
        fn(n, 1.0);
        return;
    }
    const auto mode = std::min<std::int64_t>(n, static_cast<std::int64_t>(std::floor((n + 1) * p)));
    const double b_mode = binomial_pmf(mode, n, p);
    const double odds = p / (1.0 - p);
    constexpr double kNegligible = 1e-300;

    fn(mode, b_mode);
    double b = b_mode;
    for (std::int64_t i = mode; i < n; ++i) {
        b *= static_cast<double>(n - i) / static_cast<double>(i + 1) * odds;
        if (b < kNegligible * b_mode || b == 0.0)
            break;
        fn(i + 1, b);
    }
    b = b_mode;
    for (std::int64_t i = mode; i > 0; --i) {
        b *= static_cast<double>(i) / static_cast<double>(n - i + 1) / odds;
        if (b < kNegligible * b_mode || b == 0.0)
            break;
        fn(i - 1, b);
    }
}

void check_probability(double p, const char* what)
{
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError(std::string(what) + " must lie in [0, 1]");
}

// Bracketed term of the Poisson-limit form:
// (e^{-eta/K} - e^{-eta}) / (1 - e^{-eta/K}) - (K-1) e^{-eta}
double poisson_bracket(double eta, int K)
{
    const double x = eta / K;
    return (std::exp(-x) - std::exp(-eta)) / (-std::expm1(-x)) - (K - 1) * std::exp(-eta);
}

double poisson_form(double eta, double q, const SlotConfig& cfg)
{
    if (!(eta >= 0.0))
        throw ConfigError("eta must be >= 0");
    check_probability(q, "q");
    if (eta == 0.0)
        return 0.0;
    const double single = eta * std::exp(-eta);
    if (cfg.K == 1)
        return cfg.gamma * single;

    const int K = cfg.K;
    const double numerator = single + (1.0 - q) * 2.0 * eta / K * poisson_bracket(eta, K);
    const double denominator =
        3.0 - 2.0 * q - 2.0 * (1.0 - q) * std::exp(-eta) * (K * std::expm1(eta / K) + 1.0);
    return cfg.gamma * numerator / denominator;
}

double saturated_form(std::int64_t n, double p, double q, const SlotConfig& cfg)
{
    if (n < 1)
        throw ConfigError("n must be >= 1");
    check_probability(p, "p");
    check_probability(q, "q");

    double b0 = 0.0;
    double b1 = 0.0;
    double resolution_sum = 0.0; // sum_i sum_j i B_i (K-j)^{i-1} / K^i
    double same_to_sum = 0.0;    // sum_i B_i / K^{i-1}
    const int K = cfg.K;
    for_each_binomial(n, p, [&](std::int64_t i, double b) {
        if (i == 0) {
            b0 = b;
        } else if (i == 1) {
            b1 = b;
        } else {
            resolution_sum += static_cast<double>(i) * b * resolution_factor(K, i);
            same_to_sum += b * std::pow(static_cast<double>(K), -static_cast<double>(i - 1));
        }
    });

    const double numerator = b1 + 2.0 * (1.0 - q) * resolution_sum;
    const double denominator = 3.0 - 2.0 * q - 2.0 * (1.0 - q) * (b0 + b1 + same_to_sum);
    return cfg.gamma * numerator / denominator;
}

struct OptimalPCache {
    std::shared_mutex mutex;
    std::map<std::pair<std::int64_t, int>, double> values;
};

OptimalPCache& optimal_p_cache()
{
    static OptimalPCache cache;
    return cache;
}

} // namespace

RenewalTerms renewal_terms(std::int64_t n, double p, int K)
{
    if (n < 0 || K < 1)
        throw ConfigError("renewal_terms: need n >= 0 and K >= 1");
    check_probability(p, "p");

    RenewalTerms r;
    double same_to = 0.0;
    double resolved = 0.0;
    for_each_binomial(n, p, [&](std::int64_t i, double b) {
        if (i == 0) {
            r.pr_idle = b;
        } else if (i == 1) {
            r.pr_success = b;
        } else {
            same_to += b * std::pow(static_cast<double>(K), -static_cast<double>(i - 1));
            resolved += static_cast<double>(i) * b * resolution_factor(K, i);
        }
    });
    r.pr_type2 = same_to;
    r.pr_type1 = std::max(0.0, 1.0 - r.pr_idle - r.pr_success - r.pr_type2);
    r.pr_first_resolved = resolved;
    r.pr_second_resolved = resolved;
    return r;
}

double throughput_saturated(std::int64_t n, double p, const SlotConfig& cfg)
{
    return saturated_form(n, p, 0.0, cfg);
}

double throughput_poisson(double eta, const SlotConfig& cfg)
{
    return poisson_form(eta, 0.0, cfg);
}

double throughput_upper_bound(double x)
{
    if (!(x >= 0.0))
        throw ConfigError("throughput_upper_bound: x must be >= 0");
    if (std::isinf(x))
        return 2.0 / 3.0;
    const double e = std::exp(-x);
    return (2.0 - (2.0 + x) * e) / (3.0 - 2.0 * e * (1.0 + x));
}

double throughput_upper_bound_finite(std::int64_t n, double p)
{
    const double b0 = binomial_pmf(0, n, p);
    const double b1 = binomial_pmf(1, n, p);
    return (2.0 - 2.0 * b0 - b1) / (3.0 - 2.0 * (b0 + b1));
}

double throughput_with_misdetection(PopulationMode mode, std::int64_t n, double p_or_eta, double q,
                                    const SlotConfig& cfg)
{
    if (mode == PopulationMode::Finite)
        return saturated_form(n, p_or_eta, q, cfg);
    return poisson_form(p_or_eta, q, cfg);
}

double avg_delay_saturated(std::int64_t n, double p, const SlotConfig& cfg)
{
    const double tau = throughput_saturated(n, p, cfg);
    if (!(tau > 0.0))
        throw ConfigError("avg_delay_saturated: throughput is zero at these parameters");
    return static_cast<double>(n) / tau;
}

OptimalOperatingPoint optimal_kappa(int K)
{
    if (K < 1)
        throw ConfigError("optimal_kappa: K must be >= 1");
    if (K == 1)
        return {1.0, std::exp(-1.0), 1};

    const SlotConfig unit = derive_slot_params(K, 0.0);
    auto f = [&](double kappa) { return throughput_poisson(kappa, unit); };
    const auto grid = linear_grid(kKappaSearchMax / (kGridPoints - 1) * 1e-3, kKappaSearchMax,
                                  kGridPoints);
    const Maximum m = grid_golden_max(f, grid, 1e-9);
    return {m.arg, m.value, K};
}

double kappa_fit(int K)
{
    if (K < 2 || K > 32)
        throw ConfigError("kappa_fit: valid for 2 <= K <= 32");
    return 0.2697 * std::log2(static_cast<double>(K)) + 0.8943;
}

AlphaOptimum optimal_config_for_alpha(double alpha)
{
    if (!(alpha > 0.0 && alpha < 1.0))
        throw ConfigError("optimal_config_for_alpha: alpha must lie in (0, 1)");

    AlphaOptimum best;
    best.tau_star_absolute = -1.0;
    for (int K = 1; alpha * (K - 1) < 1.0; ++K) {
        const SlotConfig cfg = derive_slot_params(K, alpha);
        const auto op = optimal_kappa(K);
        const double absolute = cfg.gamma * op.tau_star;
        if (absolute > best.tau_star_absolute)
            best = {K, op.kappa, absolute};
    }
    return best;
}

double optimal_p_for_n(std::int64_t n, const SlotConfig& cfg)
{
    if (n < 1)
        throw ConfigError("optimal_p_for_n: n must be >= 1");
    if (n == 1)
        return 1.0;

    auto& cache = optimal_p_cache();
    const auto key = std::make_pair(n, cfg.K);
    {
        std::shared_lock lock(cache.mutex);
        if (auto it = cache.values.find(key); it != cache.values.end())
            return it->second;
    }

    // gamma only scales the objective, so the search runs at alpha = 0.
    const SlotConfig unit = derive_slot_params(cfg.K, 0.0);
    auto f = [&](double p) { return saturated_form(n, p, 0.0, unit); };
    const double lo = std::min(1.0, 1e-3 / static_cast<double>(n));
    const Maximum m = grid_golden_max(f, log_grid(lo, 1.0, kGridPoints), 1e-7);

    std::unique_lock lock(cache.mutex);
    cache.values.emplace(key, m.arg);
    return m.arg;
}

double stability_threshold(const SlotConfig& cfg, std::int64_t m_max)
{
    if (m_max < 1)
        throw ConfigError("stability_threshold: m_max must be >= 1");
    double lowest = cfg.gamma * optimal_kappa(cfg.K).tau_star;
    for (std::int64_t m = 1; m <= m_max; ++m)
        lowest = std::min(lowest, throughput_saturated(m, optimal_p_for_n(m, cfg), cfg));
    return lowest;
}

EtaOptimum max_throughput_poisson(double q, const SlotConfig& cfg)
{
    auto f = [&](double eta) { return poisson_form(eta, q, cfg); };
    const auto grid = linear_grid(kKappaSearchMax * 1e-5, kKappaSearchMax, kGridPoints);
    const Maximum m = grid_golden_max(f, grid, 1e-9);
    return {m.arg, m.value};
}

double collision_posterior_mean(double nu, double p)
{
    const double k = nu * p;
    return nu + k * k / (std::expm1(k) - k);
}

PosteriorSummary collision_posterior(double nu, double p, std::int64_t n_max)
{
    if (!(nu > 0.0))
        throw ConfigError("collision_posterior: nu must be > 0");
    if (!(p > 0.0 && p <= 1.0))
        throw ConfigError("collision_posterior: p must lie in (0, 1]");
    if (static_cast<double>(n_max) < poisson_cutoff(nu))
        throw ConfigError("collision_posterior: n_max below nu + 12 sqrt(nu) + 30");

    const double k = nu * p;
    const double pr_collision = -std::expm1(-k) - k * std::exp(-k);

    PosteriorSummary out;
    out.pmf.assign(static_cast<std::size_t>(n_max) + 1, 0.0);
    for (std::int64_t n = 2; n <= n_max; ++n) {
        const double not_collision = binomial_pmf(0, n, p) + binomial_pmf(1, n, p);
        out.pmf[n] = (1.0 - not_collision) * poisson_pmf(n, nu) / pr_collision;
        out.mean += static_cast<double>(n) * out.pmf[n];
    }
    out.closed_form_mean = collision_posterior_mean(nu, p);
    for (std::int64_t n = 0; n <= n_max; ++n) {
        const double w = out.pmf[n];
        if (w > 0.0)
            out.kl_to_poisson += w * std::log(w / poisson_pmf(n, out.closed_form_mean));
    }
    out.kl_to_poisson = std::max(0.0, out.kl_to_poisson);
    return out;
}

} // namespace toaloha::analysis
