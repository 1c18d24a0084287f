#include "toaloha/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "toaloha/analysis.hpp"
#include "toaloha/detail/parallel.hpp"
#include "toaloha/engine.hpp"
#include "toaloha/fcfs.hpp"

namespace toaloha::validation {

namespace {

std::string num(double x, int digits = 6)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, x);
    return buf;
}

struct Outcome {
    bool passed = true;
    std::ostringstream detail;

    void check(bool ok, const std::string& what)
    {
        if (!ok) {
            passed = false;
            detail << "FAIL " << what << "; ";
        }
    }
    void note(const std::string& what) { detail << what << "; "; }
};

using Body = std::function<void(const Options&, Outcome&)>;

Scenario make_scenario(int K, double alpha, PolicyDescriptor policy, traffic::TrafficDescriptor traffic,
                       std::int64_t horizon, std::uint64_t seed)
{
    Scenario sc;
    sc.cfg = derive_slot_params(K, alpha);
    sc.policy = std::move(policy);
    sc.traffic = std::move(traffic);
    sc.horizon = horizon;
    sc.warmup = 1000;
    sc.seed = seed;
    return sc;
}

struct Job {
    Scenario sc;
    bool fcfs = false;
};

std::vector<MetricsRecord> run_jobs(const std::vector<Job>& jobs, unsigned threads)
{
    return detail::parallel_map<MetricsRecord>(jobs.size(), threads, [&](std::size_t i) {
        return jobs[i].fcfs ? simulate_fcfs(jobs[i].sc) : simulate(jobs[i].sc);
    });
}

double tau_star_k4()
{
    const SlotConfig cfg = derive_slot_params(4, 0.04);
    return cfg.gamma * analysis::optimal_kappa(4).tau_star;
}

// Second-half mean at most twice the first-half mean.
bool bounded(const MetricsRecord& m, std::int64_t horizon, std::string& why)
{
    const double first = mean_backlog(m, 0, horizon / 2);
    const double second = mean_backlog(m, horizon / 2, horizon);
    why = "halves " + num(first, 4) + " -> " + num(second, 4);
    return second <= 2.0 * first;
}

bool diverges(const MetricsRecord& m, std::int64_t horizon, std::string& why)
{
    const auto early = backlog_at(m, 10000);
    const auto late = m.backlog_trajectory.empty() ? 0 : m.backlog_trajectory.back().backlog;
    why = "backlog@1e4 " + std::to_string(early) + " -> @" + std::to_string(horizon) + " " +
          std::to_string(late);
    return static_cast<double>(late) > 5.0 * static_cast<double>(std::max<std::int64_t>(early, 1));
}

// 1 ----------------------------------------------------------------------------
void c1_brute_force(const Options&, Outcome& out)
{
    const auto start = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (int n = 2; n <= 5; ++n)
        for (double p : {0.2, 0.5, 1.0})
            for (int K = 2; K <= 4; ++K) {
                const SlotConfig cfg = derive_slot_params(K, 0.07);
                const double a = analysis::throughput_saturated(n, p, cfg);
                const double b = enumerated_throughput(n, p, K, cfg.gamma);
                worst = std::max(worst, std::abs(a - b));
            }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.note("max |closed form - enumeration| = " + num(worst, 3));
    out.check(worst <= 1e-10, "difference above 1e-10");
    out.check(secs < 1.0, "runtime " + num(secs, 3) + " s >= 1 s");
}

// 2 ----------------------------------------------------------------------------
void c2_saturated_sim(const Options& opt, Outcome& out)
{
    constexpr double alpha = 0.07;
    constexpr std::int64_t horizon = 100000;
    std::vector<Job> jobs;
    std::vector<double> predicted;
    std::uint64_t idx = 0;
    for (int K : {2, 3})
        for (std::int64_t n : {10, 40, 100})
            for (double p : {0.01, 0.03, 0.1}) {
                const SlotConfig cfg = derive_slot_params(K, alpha);
                jobs.push_back({make_scenario(K, alpha, FixedP{p}, traffic::Saturated{n}, horizon,
                                              opt.seed ^ (0x200 + idx++)),
                                false});
                predicted.push_back(analysis::throughput_saturated(n, p, cfg));
            }

    // Large-n anchors at the per-n optimal probability.
    const std::pair<int, double> anchors[] = {{2, 0.441}, {3, 0.455}};
    constexpr std::int64_t n_anchor = 100;
    std::vector<double> anchor_eq1;
    for (const auto& [K, target] : anchors) {
        const SlotConfig cfg = derive_slot_params(K, alpha);
        const double p = analysis::optimal_p_for_n(n_anchor, cfg);
        jobs.push_back({make_scenario(K, alpha, FixedP{p}, traffic::Saturated{n_anchor}, horizon,
                                      opt.seed ^ (0x200 + idx++)),
                        false});
        const double eq1 = analysis::throughput_saturated(n_anchor, p, cfg);
        predicted.push_back(eq1);
        anchor_eq1.push_back(eq1);
    }

    const auto res = run_jobs(jobs, opt.threads);
    double worst = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i)
        worst = std::max(worst, std::abs(res[i].throughput - predicted[i]));
    out.note("max |sim - closed form| over " + std::to_string(res.size()) + " runs = " + num(worst, 3));
    out.check(worst <= 0.01, "simulation deviates by more than 0.01");

    for (std::size_t a = 0; a < 2; ++a) {
        const auto& [K, target] = anchors[a];
        const double sim = res[res.size() - 2 + a].throughput;
        out.note("K=" + std::to_string(K) + " anchor " + num(target, 3) + ": closed form " +
                 num(anchor_eq1[a], 4) + ", sim " + num(sim, 4));
        out.check(std::abs(anchor_eq1[a] - target) <= 0.01 && std::abs(sim - target) <= 0.01,
                  "K=" + std::to_string(K) + " anchor off by more than 0.01");
    }
}

// 3 ----------------------------------------------------------------------------
void c3_table_ii(const Options&, Outcome& out)
{
    const struct {
        int K;
        double kappa;
        double tau;
    } rows[] = {{2, 1.1704, 0.4681}, {4, 1.4233, 0.5436}, {8, 1.7019, 0.5953}, {32, 2.2398, 0.6484}};
    for (const auto& r : rows) {
        const auto opt = analysis::optimal_kappa(r.K);
        out.note("K=" + std::to_string(r.K) + " kappa " + num(opt.kappa, 5) + " (d " +
                 num(opt.kappa - r.kappa, 2) + "), tau/gamma " + num(opt.tau_star, 5) + " (d " +
                 num(opt.tau_star - r.tau, 2) + ")");
        out.check(std::abs(opt.kappa - r.kappa) <= 0.01, "kappa K=" + std::to_string(r.K));
        out.check(std::abs(opt.tau_star - r.tau) <= 0.005, "tau K=" + std::to_string(r.K));
    }
    const double k16 = analysis::optimal_kappa(16).kappa;
    out.note("K=16 kappa " + num(k16, 5));
    out.check(k16 > 1.70 && k16 < 2.24, "K=16 kappa outside (1.70, 2.24)");
    double prev = 0.0;
    for (int K : {2, 4, 8, 16, 32}) {
        const double k = analysis::optimal_kappa(K).kappa;
        out.check(k > prev, "kappa not monotone at K=" + std::to_string(K));
        prev = k;
    }
}

// 4 ----------------------------------------------------------------------------
void c4_table_iii(const Options&, Outcome& out)
{
    const struct {
        double alpha;
        int K;
        double kappa;
        double tau;
    } rows[] = {{0.01, 10, 1.7927, 0.5576}, {0.02, 7, 1.6474, 0.5241}, {0.03, 5, 1.5115, 0.5024},
                {0.04, 4, 1.4233, 0.4854},  {0.07, 3, 1.3136, 0.4521}, {0.14, 2, 1.1704, 0.4107},
                {0.21, 2, 1.1704, 0.3869}};
    for (const auto& r : rows) {
        const auto best = analysis::optimal_config_for_alpha(r.alpha);
        out.note("alpha=" + num(r.alpha, 2) + " K " + std::to_string(best.K) + " kappa " + num(best.kappa, 5) +
                 " tau " + num(best.tau_star_absolute, 5));
        out.check(best.K == r.K, "K for alpha=" + num(r.alpha, 2));
        out.check(std::abs(best.kappa - r.kappa) <= 0.02, "kappa for alpha=" + num(r.alpha, 2));
        out.check(std::abs(best.tau_star_absolute - r.tau) <= 0.005, "tau for alpha=" + num(r.alpha, 2));
    }
    const auto k030 = analysis::optimal_config_for_alpha(0.30);
    out.note("alpha=0.3 K " + std::to_string(k030.K));
    out.check(k030.K == 1, "alpha=0.30 should select K=1");
}

// 5 ----------------------------------------------------------------------------
void c5_upper_bound(const Options&, Outcome& out)
{
    double best_x = 0.0;
    double best = -1.0;
    for (double x = 0.5; x <= 6.0; x += 1e-4) {
        const double v = analysis::throughput_upper_bound(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    out.note("argmax " + num(best_x, 5) + ", max " + num(best, 6));
    out.check(std::abs(best_x - 2.89) <= 0.01, "argmax not within 2.89 +- 0.01");
    out.check(std::abs(best - 0.673) <= 0.001, "max not within 0.673 +- 0.001");

    const SlotConfig proxy = derive_slot_params(analysis::kLargeKProxy, 0.0);
    double worst = 0.0;
    for (int i = 0; i <= 490; ++i) {
        const double eta = 0.1 + 0.01 * i;
        worst = std::max(worst,
                         std::abs(analysis::throughput_poisson(eta, proxy) - analysis::throughput_upper_bound(eta)));
    }
    out.note("large-K proxy max gap " + num(worst, 3));
    out.check(worst <= 1e-3, "large-K proxy gap above 1e-3");
}

// 6 ----------------------------------------------------------------------------
void c6_posterior(const Options&, Outcome& out)
{
    double worst = 0.0;
    int checked = 0;
    int skipped = 0;
    for (double nu : {1.0, 2.0, 5.0, 10.0})
        for (double kappa : {0.5, 1.0, 1.4233}) {
            const double p = kappa / nu;
            if (p > 1.0) {
                ++skipped; // not a probability
                continue;
            }
            const double closed = nu + kappa * kappa / (std::expm1(kappa) - kappa);
            const auto cutoff = static_cast<std::int64_t>(std::ceil(poisson_cutoff(nu)));
            const double summed = analysis::collision_posterior(nu, p, cutoff).mean;
            const double direct = posterior_mean_by_summation(nu, p);
            worst = std::max({worst, std::abs(summed - closed) / closed, std::abs(direct - closed) / closed});
            ++checked;
        }
    out.note(std::to_string(checked) + " points, " + std::to_string(skipped) +
             " skipped (p > 1), max rel err " + num(worst, 3));
    out.check(worst <= 1e-6, "posterior mean off by more than 1e-6 relative");
}

// 7 ----------------------------------------------------------------------------
void c7_stability(const Options& opt, Outcome& out)
{
    constexpr std::int64_t horizon = 200000;
    const double tau = tau_star_k4();
    auto sc = [&](PolicyDescriptor pol, double lambda, std::uint64_t k) {
        Scenario s = make_scenario(4, 0.04, std::move(pol), traffic::Poisson{lambda}, horizon, opt.seed ^ (0x700 + k));
        s.warmup = 0;
        return Job{s, false};
    };
    const BayesP bayes{0.99, 1.4233, CollisionIncrement::Derived};
    const std::vector<Job> jobs = {sc(bayes, 0.9 * tau, 0), sc(bayes, 1.05 * tau, 1), sc(FixedP{0.05}, 0.3, 2)};
    const auto res = run_jobs(jobs, opt.threads);

    std::string why;
    const bool ok_low = bounded(res[0], horizon, why);
    out.note("BayesP 0.9 tau*: " + why);
    out.check(ok_low, "BayesP at 0.9 tau* not bounded");
    const bool ok_high = diverges(res[1], horizon, why);
    out.note("BayesP 1.05 tau*: " + why);
    out.check(ok_high, "BayesP at 1.05 tau* did not diverge");
    const bool ok_fixed = diverges(res[2], horizon, why);
    out.note("FixedP(0.05) lambda 0.3: " + why);
    out.check(ok_fixed, "FixedP(0.05) at lambda 0.3 did not diverge");
}

// 8 ----------------------------------------------------------------------------
void c8_equivalence(const Options& opt, Outcome& out)
{
    constexpr std::int64_t horizon = 1000000;
    const double tau = tau_star_k4();
    const double fractions[] = {0.5, 0.7, 0.9};
    std::vector<Job> jobs;
    std::uint64_t k = 0;
    for (double f : fractions) {
        jobs.push_back({make_scenario(4, 0.04, BayesP{}, traffic::Poisson{f * tau}, horizon, opt.seed ^ (0x800 + k++)),
                        false});
        jobs.push_back(
            {make_scenario(4, 0.04, BayesWindow{}, traffic::Poisson{f * tau}, horizon, opt.seed ^ (0x800 + k++)),
             false});
    }
    const auto res = run_jobs(jobs, opt.threads);
    for (std::size_t i = 0; i < 3; ++i) {
        const auto& a = res[2 * i];
        const auto& w = res[2 * i + 1];
        const double rel = std::abs(w.avg_delay - a.avg_delay) / a.avg_delay;
        out.note(num(fractions[i], 2) + " tau*: delay " + num(a.avg_delay, 4) + " vs " + num(w.avg_delay, 4) +
                 " (rel " + num(rel, 3) + "), monitoring " + num(a.mean_monitoring, 4) + " vs " +
                 num(w.mean_monitoring, 4));
        out.check(rel <= 0.10, "delay gap above 10% at " + num(fractions[i], 2) + " tau*");
        out.check(w.mean_monitoring < 5.0, "window monitoring >= 5 at " + num(fractions[i], 2) + " tau*");
    }
}

// 9 ----------------------------------------------------------------------------
void c9_fcfs(const Options& opt, Outcome& out)
{
    constexpr std::int64_t horizon = 200000;
    auto sc = [&](double lambda, std::uint64_t k) {
        Scenario s = make_scenario(1, 0.0, FixedP{}, traffic::Poisson{lambda}, horizon, opt.seed ^ (0x900 + k));
        return Job{s, true};
    };
    const auto res = run_jobs({sc(0.52, 0), sc(0.45, 1)}, opt.threads);
    out.note("overloaded (0.52) throughput " + num(res[0].throughput, 4));
    out.check(res[0].throughput >= 0.47 && res[0].throughput <= 0.50, "overloaded throughput outside [0.47, 0.50]");
    std::string why;
    const bool ok_div = diverges(res[0], horizon, why);
    out.note("0.52: " + why);
    out.check(ok_div, "FCFS at 0.52 did not diverge");
    const bool ok_stable = bounded(res[1], horizon, why);
    out.note("0.45: " + why + ", delay " + num(res[1].avg_delay, 4));
    out.check(ok_stable, "FCFS at 0.45 not bounded");
}

// 10 ---------------------------------------------------------------------------
void c10_misdetection(const Options&, Outcome& out)
{
    const SlotConfig cfg = derive_slot_params(4, 0.04);
    double prev = std::numeric_limits<double>::infinity();
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const auto best = analysis::max_throughput_poisson(q, cfg);
        out.note("q=" + num(q, 2) + " max " + num(best.value, 6) + " at eta " + num(best.eta, 4));
        out.check(best.value <= prev + 1e-12, "not non-increasing at q=" + num(q, 2));
        prev = best.value;
    }
    const double aloha = cfg.gamma * std::exp(-1.0);
    out.note("q=1 vs gamma/e gap " + num(std::abs(prev - aloha), 3));
    out.check(std::abs(prev - aloha) <= 1e-6, "q=1 maximum differs from gamma/e");
}

// 11 ---------------------------------------------------------------------------
void c11_little(const Options& opt, Outcome& out)
{
    constexpr std::int64_t horizon = 200000;
    const double tau = tau_star_k4();
    std::vector<Job> jobs;
    std::vector<std::string> names;
    std::uint64_t k = 0;
    auto add = [&](std::string name, PolicyDescriptor pol, double lambda, bool fcfs) {
        jobs.push_back({make_scenario(fcfs ? 1 : 4, fcfs ? 0.0 : 0.04, std::move(pol), traffic::Poisson{lambda},
                                      horizon, opt.seed ^ (0xB00 + k++)),
                        fcfs});
        names.push_back(std::move(name));
    };
    add("bayes_p 0.5", BayesP{}, 0.5 * tau, false);
    add("bayes_p 0.7", BayesP{}, 0.7 * tau, false);
    add("bayes_window 0.5", BayesWindow{}, 0.5 * tau, false);
    add("bayes_window 0.7", BayesWindow{}, 0.7 * tau, false);
    add("genie 0.4", Genie{}, 0.4, false);
    add("fixed 0.2", FixedP{0.05}, 0.2, false);
    add("fcfs 0.45", FixedP{}, 0.45, true);
    const auto res = run_jobs(jobs, opt.threads);
    double worst = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& m = res[i];
        const double rel = std::abs(m.avg_backlog - m.throughput * m.avg_delay) / m.avg_backlog;
        worst = std::max(worst, rel);
        out.check(rel <= 0.05, names[i] + " off by " + num(rel, 3));
    }
    out.note(std::to_string(res.size()) + " runs, max rel gap " + num(worst, 3));
}

// 12 ---------------------------------------------------------------------------
void c12_beta(const Options& opt, Outcome& out)
{
    constexpr std::int64_t horizon = 40000;
    const std::int64_t sizes[] = {1000, 2000, 5000};
    std::vector<Job> jobs;
    std::uint64_t k = 0;
    for (auto N : sizes) {
        traffic::BetaActivation beta;
        beta.N = N;
        Scenario s = make_scenario(4, 0.04, BayesP{}, beta, horizon, opt.seed ^ (0xC00 + k++));
        s.warmup = 0;
        jobs.push_back({s, false});
    }
    const auto res = run_jobs(jobs, opt.threads);
    const double Ts = derive_slot_params(4, 0.04).Ts;
    double prev = 0.0;
    for (std::size_t i = 0; i < res.size(); ++i) {
        const auto& done = res[i].service_completion_slot;
        if (!done) {
            out.check(false, "N=" + std::to_string(sizes[i]) + " not cleared within the horizon");
            continue;
        }
        const double service = static_cast<double>(*done) * Ts;
        out.note("N=" + std::to_string(sizes[i]) + " service time " + num(service, 6) + " T");
        out.check(service >= prev, "service time decreased at N=" + std::to_string(sizes[i]));
        prev = service;
    }
}

struct Entry {
    Criterion info;
    Body body;
};

const std::vector<Entry>& registry()
{
    static const std::vector<Entry> entries = {
        {{1, "analysis", "closed form vs brute-force enumeration"}, c1_brute_force},
        {{2, "simulation", "saturated simulation vs closed form"}, c2_saturated_sim},
        {{3, "analysis", "optimal kappa per K"}, c3_table_ii},
        {{4, "analysis", "optimal K per alpha"}, c4_table_iii},
        {{5, "analysis", "throughput upper bound"}, c5_upper_bound},
        {{6, "analysis", "collision posterior mean"}, c6_posterior},
        {{7, "simulation", "stability under Poisson load"}, c7_stability},
        {{8, "simulation", "probability vs window algorithm"}, c8_equivalence},
        {{9, "simulation", "FCFS splitting baseline"}, c9_fcfs},
        {{10, "analysis", "misdetection reduces throughput"}, c10_misdetection},
        {{11, "simulation", "Little's law"}, c11_little},
        {{12, "simulation", "Beta activation clears"}, c12_beta},
    };
    return entries;
}

} // namespace

EnumeratedRenewal enumerate_renewal(int n, double p, int K)
{
    if (n < 0 || n > 12 || K < 1 || K > 16)
        throw ConfigError("enumerate_renewal: need 0 <= n <= 12 and 1 <= K <= 16");
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("enumerate_renewal: p must lie in [0, 1]");

    EnumeratedRenewal r;
    std::vector<int> choice(static_cast<std::size_t>(n), 0); // 0 = silent, else TO
    while (true) {
        double w = 1.0;
        int count = 0;
        int lo = K + 1;
        int hi = 0;
        for (int c : choice) {
            if (c == 0) {
                w *= 1.0 - p;
            } else {
                w *= p / K;
                ++count;
                lo = std::min(lo, c);
                hi = std::max(hi, c);
            }
        }
        if (w > 0.0) {
            if (count == 0) {
                r.pr_idle += w;
                r.expected_length += w;
            } else if (count == 1) {
                r.pr_success += w;
                r.expected_reward += w;
                r.expected_length += w;
            } else if (lo == hi) {
                r.pr_type2 += w;
                r.expected_length += w;
            } else {
                const auto at_lo = std::count(choice.begin(), choice.end(), lo);
                const auto at_hi = std::count(choice.begin(), choice.end(), hi);
                r.pr_type1 += w;
                r.expected_reward += w * ((at_lo == 1 ? 1.0 : 0.0) + (at_hi == 1 ? 1.0 : 0.0));
                r.expected_length += 3.0 * w;
            }
        }
        int pos = 0;
        while (pos < n && choice[static_cast<std::size_t>(pos)] == K)
            choice[static_cast<std::size_t>(pos++)] = 0;
        if (pos == n)
            break;
        ++choice[static_cast<std::size_t>(pos)];
    }
    return r;
}

double enumerated_throughput(int n, double p, int K, double gamma)
{
    const auto r = enumerate_renewal(n, p, K);
    return gamma * r.expected_reward / r.expected_length;
}

double posterior_mean_by_summation(double nu, double p)
{
    if (!(nu > 0.0) || !(p > 0.0 && p <= 1.0))
        throw ConfigError("posterior_mean_by_summation: need nu > 0 and p in (0, 1]");
    const auto n_max = static_cast<std::int64_t>(nu + 40.0 * std::sqrt(nu) + 60.0);
    double prior = std::exp(-nu); // Poisson pmf at n, by recurrence
    double mass = 0.0;
    double first = 0.0;
    for (std::int64_t n = 0; n <= n_max; ++n) {
        if (n > 0)
            prior *= nu / static_cast<double>(n);
        const double dn = static_cast<double>(n);
        const double none = std::pow(1.0 - p, dn);
        const double one = n > 0 ? dn * p * std::pow(1.0 - p, dn - 1.0) : 0.0;
        const double w = prior * (1.0 - none - one);
        mass += w;
        first += dn * w;
    }
    return first / mass;
}

const std::vector<Criterion>& criteria()
{
    static const std::vector<Criterion> list = [] {
        std::vector<Criterion> out;
        for (const auto& e : registry())
            out.push_back(e.info);
        return out;
    }();
    return list;
}

std::vector<Criterion> select(const std::string& filter)
{
    if (filter.empty() || filter == "all")
        return criteria();
    std::vector<Criterion> out;
    for (const auto& c : criteria())
        if (c.group == filter)
            out.push_back(c);
    if (!out.empty())
        return out;

    std::set<int> ids;
    std::stringstream ss(filter);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t used = 0;
            const int id = std::stoi(tok, &used);
            if (used != tok.size())
                throw ConfigError("");
            ids.insert(id);
        } catch (const std::exception&) {
            throw ConfigError("unknown filter '" + filter + "' (use analysis, simulation or criterion ids)");
        }
    }
    for (const auto& c : criteria())
        if (ids.count(c.id) != 0)
            out.push_back(c);
    if (out.empty() || out.size() != ids.size())
        throw ConfigError("filter '" + filter + "' names unknown criteria");
    return out;
}

std::vector<CriterionResult> run(const Options& options)
{
    const auto chosen = select(options.filter);
    std::vector<CriterionResult> results;
    for (const auto& e : registry()) {
        if (std::none_of(chosen.begin(), chosen.end(), [&](const Criterion& c) { return c.id == e.info.id; }))
            continue;
        CriterionResult r;
        r.id = e.info.id;
        r.group = e.info.group;
        r.title = e.info.title;
        Outcome out;
        const auto start = std::chrono::steady_clock::now();
        try {
            e.body(options, out);
        } catch (const std::exception& ex) {
            out.check(false, std::string("exception: ") + ex.what());
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        r.passed = out.passed;
        r.detail = out.detail.str();
        if (r.detail.size() >= 2)
            r.detail.resize(r.detail.size() - 2);
        results.push_back(std::move(r));
    }
    return results;
}

std::string format(const CriterionResult& r)
{
    char head[160];
    std::snprintf(head, sizeof head, "[%s] %2d %-10s %-42s (%.2f s) ", r.passed ? "PASS" : "FAIL", r.id,
                  r.group.c_str(), r.title.c_str(), r.seconds);
    return head + r.detail;
}

} // namespace toaloha::validation
