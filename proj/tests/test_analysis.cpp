#include <doctest.h>

#include <cmath>
#include <map>
#include <vector>

#include "toaloha/analysis.hpp"

using namespace toaloha;
namespace an = toaloha::analysis;

namespace {

// E[reward | i transmitters] and Pr[type-1 | i] by walking all K^i TO
// assignments, combined with binomial weights.
struct ByCount {
    std::vector<double> reward;
    std::vector<double> type1;
};

ByCount enumerate_by_count(int K, int i_max)
{
    ByCount out;
    for (int i = 0; i <= i_max; ++i) {
        if (i < 2) {
            out.reward.push_back(i == 1 ? 1.0 : 0.0);
            out.type1.push_back(0.0);
            continue;
        }
        std::vector<int> to(static_cast<std::size_t>(i), 1);
        double reward = 0.0;
        double type1 = 0.0;
        double total = 0.0;
        while (true) {
            int lo = K, hi = 1, at_lo = 0, at_hi = 0;
            for (int t : to) {
                lo = std::min(lo, t);
                hi = std::max(hi, t);
            }
            for (int t : to) {
                at_lo += t == lo;
                at_hi += t == hi;
            }
            total += 1.0;
            if (lo != hi) {
                type1 += 1.0;
                reward += (at_lo == 1) + (at_hi == 1);
            }
            int pos = 0;
            while (pos < i && to[static_cast<std::size_t>(pos)] == K)
                to[static_cast<std::size_t>(pos++)] = 1;
            if (pos == i)
                break;
            ++to[static_cast<std::size_t>(pos)];
        }
        out.reward.push_back(reward / total);
        out.type1.push_back(type1 / total);
    }
    return out;
}

double oracle_throughput(const ByCount& bc, int n, double p, double gamma)
{
    double reward = 0.0, length = 0.0;
    for (int i = 0; i <= n; ++i) {
        const double w = std::tgamma(n + 1.0) / (std::tgamma(i + 1.0) * std::tgamma(n - i + 1.0)) *
                         std::pow(p, i) * std::pow(1.0 - p, n - i);
        reward += w * bc.reward[static_cast<std::size_t>(i)];
        length += w * (1.0 + 2.0 * bc.type1[static_cast<std::size_t>(i)]);
    }
    return gamma * reward / length;
}

} // namespace

TEST_CASE("saturated throughput matches per-count enumeration")
{
    for (int K : {2, 3, 4}) {
        const int i_max = K == 4 ? 10 : 12;
        const auto bc = enumerate_by_count(K, i_max);
        const SlotConfig cfg = derive_slot_params(K, 0.05);
        for (int n = 2; n <= i_max; ++n)
            for (double p : {0.1, 0.5, 1.0})
                CHECK(an::throughput_saturated(n, p, cfg) ==
                      doctest::Approx(oracle_throughput(bc, n, p, cfg.gamma)).epsilon(1e-11));
    }
}

TEST_CASE("saturated throughput examples")
{
    for (int K : {1, 2, 5}) {
        const SlotConfig cfg = derive_slot_params(K, 0.07);
        CHECK(an::throughput_saturated(1, 1.0, cfg) == doctest::Approx(cfg.gamma));
    }
    const SlotConfig k2 = derive_slot_params(2, 0.07);
    CHECK(an::throughput_saturated(2, 1.0, k2) == doctest::Approx(0.5 * k2.gamma).epsilon(1e-12));

    const SlotConfig k3 = derive_slot_params(3, 0.07);
    CHECK(an::throughput_saturated(50, an::optimal_p_for_n(50, k3), k3) == doctest::Approx(0.455).epsilon(0.01));
    CHECK(an::throughput_saturated(50, an::optimal_p_for_n(50, k2), k2) == doctest::Approx(0.441).epsilon(0.01));
}

TEST_CASE("K = 1 reduces to slotted ALOHA")
{
    const SlotConfig cfg = derive_slot_params(1, 0.0);
    for (std::int64_t n : {1, 2, 7, 100})
        for (double p : {0.01, 0.2, 0.9})
            CHECK(an::throughput_saturated(n, p, cfg) ==
                  doctest::Approx(n * p * std::pow(1.0 - p, static_cast<double>(n - 1))).epsilon(1e-12));
}

TEST_CASE("renewal terms are a distribution and symmetric")
{
    for (int K : {1, 2, 4, 9})
        for (std::int64_t n : {1, 2, 5, 60, 300})
            for (double p : {0.01, 0.3, 1.0}) {
                const auto r = an::renewal_terms(n, p, K);
                CHECK(r.pr_idle + r.pr_success + r.pr_type1 + r.pr_type2 == doctest::Approx(1.0).epsilon(1e-12));
                CHECK(r.pr_first_resolved == doctest::Approx(r.pr_second_resolved).epsilon(1e-12));
            }
}

TEST_CASE("Poisson-limit throughput")
{
    const SlotConfig k2 = derive_slot_params(2, 0.0);
    CHECK(an::throughput_poisson(1.1704, k2) == doctest::Approx(0.4681).epsilon(2e-4));
    const SlotConfig k32 = derive_slot_params(32, 0.0);
    CHECK(an::throughput_poisson(2.2398, k32) == doctest::Approx(0.6484).epsilon(2e-4));
    const SlotConfig k4 = derive_slot_params(4, 0.04);
    CHECK(an::throughput_poisson(0.0, k4) == 0.0);
    CHECK(an::throughput_poisson(1.3, derive_slot_params(1, 0.0)) == doctest::Approx(1.3 * std::exp(-1.3)));

    // gamma scales the whole expression.
    CHECK(an::throughput_poisson(1.4, k4) ==
          doctest::Approx(k4.gamma * an::throughput_poisson(1.4, derive_slot_params(4, 0.0))).epsilon(1e-12));

    // Finite population converges to the Poisson limit.
    const double eta = 1.4;
    CHECK(an::throughput_saturated(20000, eta / 20000, k4) == doctest::Approx(an::throughput_poisson(eta, k4)).epsilon(1e-4));
}

TEST_CASE("upper bound")
{
    CHECK(an::throughput_upper_bound(INFINITY) == doctest::Approx(2.0 / 3.0));
    CHECK(an::throughput_upper_bound(200.0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(an::throughput_upper_bound(2.89) == doctest::Approx(0.673).epsilon(1e-3));
    const long double e1 = std::exp(-1.0L);
    const auto at1 = static_cast<double>((2.0L - 3.0L * e1) / (3.0L - 4.0L * e1));
    CHECK(an::throughput_upper_bound(1.0) == doctest::Approx(at1).epsilon(1e-13));
    CHECK(an::throughput_upper_bound(1.0) == doctest::Approx(0.586439).epsilon(1e-6));
    CHECK(an::throughput_upper_bound_finite(100000, 2.89 / 100000) == doctest::Approx(0.673).epsilon(1e-3));
}

TEST_CASE("misdetection")
{
    const SlotConfig cfg = derive_slot_params(4, 0.04);
    using an::PopulationMode;
    for (std::int64_t n : {2, 10, 50})
        for (double p : {0.05, 0.3}) {
            CHECK(an::throughput_with_misdetection(PopulationMode::Finite, n, p, 0.0, cfg) ==
                  doctest::Approx(an::throughput_saturated(n, p, cfg)).epsilon(1e-12));
            const double b1 = n * p * std::pow(1.0 - p, static_cast<double>(n - 1));
            CHECK(an::throughput_with_misdetection(PopulationMode::Finite, n, p, 1.0, cfg) ==
                  doctest::Approx(cfg.gamma * b1).epsilon(1e-12));
        }
    CHECK(an::throughput_with_misdetection(PopulationMode::PoissonLimit, 0, 1.4233, 0.0, cfg) ==
          doctest::Approx(an::throughput_poisson(1.4233, cfg)).epsilon(1e-12));

    const double v0 = an::throughput_with_misdetection(PopulationMode::PoissonLimit, 0, 1.4233, 0.0, cfg);
    const double vh = an::throughput_with_misdetection(PopulationMode::PoissonLimit, 0, 1.4233, 0.5, cfg);
    const double v1 = an::throughput_with_misdetection(PopulationMode::PoissonLimit, 0, 1.4233, 1.0, cfg);
    CHECK(vh < v0);
    CHECK(vh > v1);
    double prev = INFINITY;
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        const double v = an::throughput_with_misdetection(PopulationMode::PoissonLimit, 0, 2.0, q, cfg);
        CHECK(v <= prev);
        prev = v;
    }
    CHECK_THROWS_AS(an::throughput_with_misdetection(PopulationMode::Finite, 5, 0.1, 1.5, cfg), ConfigError);
}

TEST_CASE("saturated delay")
{
    const SlotConfig cfg = derive_slot_params(2, 0.07);
    CHECK(an::avg_delay_saturated(1, 1.0, cfg) == doctest::Approx(1.0 / cfg.gamma));
    CHECK(an::avg_delay_saturated(2, 1.0, cfg) == doctest::Approx(4.0 / cfg.gamma));
    const SlotConfig dense = derive_slot_params(an::kLargeKProxy, 0.0);
    CHECK(an::avg_delay_saturated(2, 1.0, dense) == doctest::Approx(3.0).epsilon(1e-3));
}

TEST_CASE("optimal kappa")
{
    const auto k1 = an::optimal_kappa(1);
    CHECK(k1.kappa == doctest::Approx(1.0));
    CHECK(k1.tau_star == doctest::Approx(std::exp(-1.0)));
    CHECK(an::optimal_kappa(2).kappa == doctest::Approx(1.1704).epsilon(1e-3));
    CHECK(an::optimal_kappa(2).tau_star == doctest::Approx(0.4681).epsilon(1e-3));
    CHECK(an::optimal_kappa(8).kappa == doctest::Approx(1.7019).epsilon(1e-3));
    CHECK(an::optimal_kappa(8).tau_star == doctest::Approx(0.5953).epsilon(1e-3));

    const double k16 = an::optimal_kappa(16).kappa;
    CHECK(k16 > an::optimal_kappa(8).kappa);
    CHECK(k16 < an::optimal_kappa(32).kappa);

    double prev_k = 0.0, prev_t = 0.0;
    for (int K : {1, 2, 4, 8, 16, 32, 128}) {
        const auto r = an::optimal_kappa(K);
        CHECK(r.kappa >= prev_k);
        CHECK(r.tau_star > prev_t);
        CHECK(r.tau_star < 0.6731);
        prev_k = r.kappa;
        prev_t = r.tau_star;
    }
}

TEST_CASE("kappa fit")
{
    CHECK(an::kappa_fit(2) == doctest::Approx(1.1640).epsilon(1e-4));
    CHECK(an::kappa_fit(4) == doctest::Approx(1.4337).epsilon(1e-4));
    CHECK(an::kappa_fit(32) == doctest::Approx(2.2428).epsilon(1e-4));
    CHECK_THROWS_AS(an::kappa_fit(1), ConfigError);
    CHECK_THROWS_AS(an::kappa_fit(33), ConfigError);
}

TEST_CASE("optimal configuration per alpha")
{
    const auto a04 = an::optimal_config_for_alpha(0.04);
    CHECK(a04.K == 4);
    CHECK(a04.kappa == doctest::Approx(1.4233).epsilon(1e-3));
    CHECK(a04.tau_star_absolute == doctest::Approx(0.4854).epsilon(1e-3));
    const auto a21 = an::optimal_config_for_alpha(0.21);
    CHECK(a21.K == 2);
    CHECK(a21.tau_star_absolute == doctest::Approx(0.3869).epsilon(1e-3));
    CHECK(an::optimal_config_for_alpha(0.30).K == 1);
    CHECK(an::optimal_config_for_alpha(0.28).K == 1);
    CHECK_THROWS_AS(an::optimal_config_for_alpha(0.0), ConfigError);
}

TEST_CASE("optimal p for n")
{
    const SlotConfig k3 = derive_slot_params(3, 0.07);
    CHECK(an::optimal_p_for_n(1, k3) == 1.0);
    CHECK(an::optimal_p_for_n(40, k3) == doctest::Approx(0.03).epsilon(0.005));
    CHECK(an::optimal_p_for_n(40, derive_slot_params(2, 0.14)) == doctest::Approx(0.0293).epsilon(5e-4));

    // The argmax beats nearby probabilities.
    const double p = an::optimal_p_for_n(100, k3);
    const double best = an::throughput_saturated(100, p, k3);
    CHECK(best >= an::throughput_saturated(100, p * 1.02, k3));
    CHECK(best >= an::throughput_saturated(100, p * 0.98, k3));
}

TEST_CASE("stability threshold")
{
    CHECK(an::stability_threshold(derive_slot_params(1, 0.0), 2000) == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    CHECK(an::stability_threshold(derive_slot_params(4, 0.04), 2000) == doctest::Approx(0.4854).epsilon(1e-3));
    CHECK_THROWS_AS(an::stability_threshold(derive_slot_params(4, 0.04), 0), ConfigError);
}

TEST_CASE("collision posterior")
{
    const auto cut = [](double nu) { return static_cast<std::int64_t>(std::ceil(poisson_cutoff(nu))); };
    const auto post = an::collision_posterior(1.0, 1.0, cut(1.0));
    CHECK(post.mean == doctest::Approx(1.0 + 1.0 / (std::exp(1.0) - 2.0)).epsilon(1e-9));
    CHECK(post.mean == doctest::Approx(2.3922).epsilon(1e-4));
    double sum = 0.0;
    for (double v : post.pmf)
        sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));

    const double kappa = 1.4233;
    double prev = INFINITY;
    for (double nu : {2.0, 4.0, 6.0, 8.0, 10.0}) {
        const auto s = an::collision_posterior(nu, kappa / nu, cut(nu));
        CHECK(s.kl_to_poisson < prev);
        prev = s.kl_to_poisson;
        CHECK(s.mean == doctest::Approx(an::collision_posterior_mean(nu, kappa / nu)).epsilon(1e-9));
    }
    CHECK_THROWS_AS(an::collision_posterior(10.0, 0.1, 5), ConfigError);
}
