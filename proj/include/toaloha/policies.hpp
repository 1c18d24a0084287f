#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>

#include "toaloha/core_model.hpp"

namespace toaloha {

/// Collision increment added to the backlog estimate. Derived uses
/// k^2 / (e^k - k - 1), the posterior mean shift after a collision;
/// AsPrinted keeps the k / (e^k - k - 1) variant for sensitivity runs.
enum class CollisionIncrement { Derived, AsPrinted };

/// Base-station side backlog estimator driving both Bayesian policies.
struct EstimatorState {
    double nu = 1.0;         ///< estimated mean backlog
    double lambda_hat = 0.0; ///< estimated arrival rate, packets per slot
    int L_prev = 1;          ///< length in slots of the previous cycle
    double theta = 0.99;
    double kappa = 1.0;
    double p_star = 1.0; ///< probability broadcast for the next open slot
    CollisionIncrement increment = CollisionIncrement::Derived;
};

EstimatorState make_estimator(double theta, double kappa,
                              CollisionIncrement increment = CollisionIncrement::Derived);

/// k^2/(e^k-k-1) or k/(e^k-k-1) depending on `increment`.
double collision_increment(double kappa, CollisionIncrement increment);

/// One estimator step after the cycle that started with an open slot whose
/// announced outcome is `announced`. `s` counts the closed-slot successes
/// following a type-1 collision and is ignored otherwise.
EstimatorState estimator_update(const EstimatorState& st, OutcomeCode announced, int s);

enum class OutcomeClass { Idle, Success, Collision };

/// Posterior mean backlog under a Poisson(nu) prior given the outcome class.
double posterior_mean_oracle(double nu, double p, OutcomeClass outcome);

/// Uniform backoff window matched to p_star: ceil(2 / p_star).
int window_size(double p_star);

// Policies -----------------------------------------------------------------

struct FixedP {
    double p = 0.1;
};

/// kappa <= 0 selects analysis::optimal_kappa(K) at run time.
struct BayesP {
    double theta = 0.99;
    double kappa = 0.0;
    CollisionIncrement increment = CollisionIncrement::Derived;
};

struct BayesWindow {
    double theta = 0.99;
    double kappa = 0.0;
    CollisionIncrement increment = CollisionIncrement::Derived;
};

/// Knows the exact backlog and applies the per-count optimal probability.
struct Genie {};

using PolicyDescriptor = std::variant<FixedP, BayesP, BayesWindow, Genie>;

void validate(const PolicyDescriptor& policy);
std::string policy_name(const PolicyDescriptor& policy);

// Per-user behaviour ----------------------------------------------------------

enum class RoleTag : std::uint8_t { None, FirstRetransmitter, LastRetransmitter };

struct UserState {
    std::uint64_t id = 0;
    bool has_packet = true;
    double arrival_time = 0.0; ///< units of T
    RoleTag role_tag = RoleTag::None;
    std::int64_t backoff_counter = 0; ///< uniform-window policy only
    bool monitoring = false;
};

/// What a user observes before deciding: the slot state and the most
/// recent broadcast (probability and window size).
struct BroadcastView {
    bool slot_open = true;
    int K = 1;
    double p = 1.0; ///< FixedP value, broadcast p*, or genie probability
    int U = 2;      ///< uniform-window size
};

struct Hold {
    friend bool operator==(const Hold&, const Hold&) = default;
};
struct Transmit {
    int to = 1;
    friend bool operator==(const Transmit&, const Transmit&) = default;
};
using Decision = std::variant<Hold, Transmit>;

/// Draws a counter uniformly from 0..U-1.
std::int64_t draw_backoff_counter(int U, std::mt19937_64& rng);

/**
 * Per-slot decision of one backlogged user. Bernoulli policies transmit
 * with probability view.p in open slots. The uniform-window policy
 * transmits when its counter is zero in an open slot, counts down
 * otherwise, and redraws from view.U when its counter expires in a closed
 * slot. The TO is uniform on 1..K.
 */
Decision user_decision(const PolicyDescriptor& policy, UserState& user, const BroadcastView& view,
                       std::mt19937_64& rng);

} // namespace toaloha
