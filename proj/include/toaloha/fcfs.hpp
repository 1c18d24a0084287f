#pragma once

#include <optional>

#include "toaloha/engine.hpp"

namespace toaloha {

/// Half-open interval [start, start + length) over arrival timestamps.
struct Interval {
    double start = 0.0;
    double length = 0.0;
    double end() const { return start + length; }
};

/// Maximum stable throughput of FCFS splitting, packets per slot.
inline constexpr double kFcfsCapacity = 0.4871;

enum class FcfsFeedback { Idle, Success, Collision };

/**
 * FCFS splitting state. Everything with a timestamp before commit_time has
 * been delivered. During a collision resolution period (CRP) `current` is
 * the interval being transmitted and `pending_right` the untried right
 * sibling of the last split, if any.
 */
struct FcfsState {
    double commit_time = 0.0;
    Interval current;
    std::optional<Interval> pending_right;
    bool crp_active = false;
    bool on_left = false; ///< current is the left half of a split
    double window = 2.6;  ///< initial allocation length, in slots
};

/// Allocation interval for a new CRP at slot start `now`.
Interval fcfs_allocate(const FcfsState& state, double now);

/// Advances the state after transmitting `state.current` with the given
/// feedback. Idle on a left half splits the right sibling without
/// transmitting it whole.
FcfsState fcfs_update(const FcfsState& state, FcfsFeedback outcome);

/// Runs FCFS on plain slots (Ts = T). Saturated traffic is rejected; use
/// an overloaded Poisson rate instead.
MetricsRecord simulate_fcfs(const Scenario& scenario);

} // namespace toaloha
