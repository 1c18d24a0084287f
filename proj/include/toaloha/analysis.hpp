#pragma once

#include <cstdint>
#include <vector>

#include "toaloha/core_model.hpp"

namespace toaloha::analysis {

/// Stand-in for K -> infinity when a finite K is required.
inline constexpr int kLargeKProxy = 10000;

/// Default search bound for stability_threshold.
inline constexpr std::int64_t kStabilitySearchBound = 10000;

/// Upper end of the kappa search interval.
inline constexpr double kKappaSearchMax = 8.0;

/**
 * Per-slot event probabilities for n saturated users with transmission
 * probability p and K offsets, plus the renewal-cycle reward and length
 * (the latter in slots). Pr[S1|n] == Pr[S2|n] by symmetry but both are kept.
 */
struct RenewalTerms {
    double pr_idle = 0.0;
    double pr_success = 0.0;
    double pr_type1 = 0.0;
    double pr_type2 = 0.0;
    double pr_first_resolved = 0.0;  ///< Pr[S1|n]
    double pr_second_resolved = 0.0; ///< Pr[S2|n]

    double expected_reward() const { return pr_success + pr_first_resolved + pr_second_resolved; }
    double expected_length_slots() const { return pr_idle + pr_success + pr_type2 + 3.0 * pr_type1; }
};

RenewalTerms renewal_terms(std::int64_t n, double p, int K);

/// Saturated throughput in packets per T for n users (closed form with the
/// double sum over packet count and first-TO index).
double throughput_saturated(std::int64_t n, double p, const SlotConfig& cfg);

/// Poisson-limit throughput in packets per T with mean attempt rate eta.
/// K = 1 evaluates to gamma * eta * e^{-eta}.
double throughput_poisson(double eta, const SlotConfig& cfg);

/// Offset-dense (K -> inf, alpha -> 0) throughput as a function of x = n p.
double throughput_upper_bound(double x);

/// Finite-population form of throughput_upper_bound.
double throughput_upper_bound_finite(std::int64_t n, double p);

enum class PopulationMode { Finite, PoissonLimit };

/// Throughput when a type-1 collision is reported as type-2 with
/// probability q. For Finite, `n` and `p_or_eta` = p; for PoissonLimit,
/// `n` is ignored and `p_or_eta` = eta.
double throughput_with_misdetection(PopulationMode mode, std::int64_t n, double p_or_eta,
                                    double q, const SlotConfig& cfg);

/// Mean access delay n / tau_n(p) in units of T. Throws ConfigError when
/// the throughput is zero.
double avg_delay_saturated(std::int64_t n, double p, const SlotConfig& cfg);

struct OptimalOperatingPoint {
    double kappa = 0.0;
    double tau_star = 0.0; ///< normalized by gamma
    int K = 1;
};

/// kappa = nu*p maximizing the Poisson-limit throughput for K offsets.
OptimalOperatingPoint optimal_kappa(int K);

/// Log-linear approximation of optimal_kappa for 2 <= K <= 32.
double kappa_fit(int K);

struct AlphaOptimum {
    int K = 1;
    double kappa = 1.0;
    double tau_star_absolute = 0.0; ///< gamma included
};

/// Tries every admissible K for this alpha (T = 1) and keeps the best.
AlphaOptimum optimal_config_for_alpha(double alpha);

/// argmax over p of throughput_saturated(n, p, cfg); memoized per (n, K).
double optimal_p_for_n(std::int64_t n, const SlotConfig& cfg);

/// min over m = 1..m_max of tau_m(p_m*) and the Poisson-limit optimum.
double stability_threshold(const SlotConfig& cfg, std::int64_t m_max = kStabilitySearchBound);

struct EtaOptimum {
    double eta = 0.0;
    double value = 0.0;
};

/// Maximizes throughput_with_misdetection(PoissonLimit) over eta in (0, 8].
EtaOptimum max_throughput_poisson(double q, const SlotConfig& cfg);

struct PosteriorSummary {
    std::vector<double> pmf; ///< Pr[n | collision], n = 0..n_max
    double mean = 0.0;       ///< summed from pmf
    double closed_form_mean = 0.0;
    double kl_to_poisson = 0.0; ///< D(pmf || Poisson(closed_form_mean))
};

/// Exact backlog posterior after a collision under a Poisson(nu) prior.
/// Throws ConfigError when n_max < poisson_cutoff(nu).
PosteriorSummary collision_posterior(double nu, double p, std::int64_t n_max);

/// nu + k^2 / (e^k - k - 1) with k = nu * p.
double collision_posterior_mean(double nu, double p);

} // namespace toaloha::analysis
