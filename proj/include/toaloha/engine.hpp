#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "toaloha/core_model.hpp"
#include "toaloha/policies.hpp"
#include "toaloha/traffic.hpp"

namespace toaloha {

/// One simulation run.
struct Scenario {
    SlotConfig cfg;
    PolicyDescriptor policy = FixedP{};
    traffic::TrafficDescriptor traffic = traffic::Saturated{};
    std::int64_t horizon = 100000;
    std::int64_t warmup = 1000;
    std::uint64_t seed = 1;
    double q = 0.0; ///< type-1 misdetection probability
    std::int64_t sample_every = 100; ///< backlog trajectory sampling period (slots)
};

void validate(const Scenario& scenario);

struct BacklogSample {
    std::int64_t slot = 0;
    std::int64_t backlog = 0; ///< packets in the system at the start of the slot
    double estimate = 0.0;    ///< estimator nu, or NaN without an estimator
};

struct MetricsRecord {
    std::int64_t slots_elapsed = 0; ///< slots simulated, including warmup
    std::int64_t measured_slots = 0;
    std::int64_t successes = 0; ///< deliveries in measured slots
    std::int64_t arrivals = 0;  ///< arrivals in measured slots
    double throughput = 0.0;    ///< packets per T over measured slots
    double sum_delay = 0.0;     ///< units of T
    std::int64_t delay_count = 0;
    double avg_delay = 0.0;   ///< NaN when nothing was delivered or saturated
    double avg_backlog = 0.0; ///< time-averaged packets in system
    double monitoring_sum = 0.0;
    double mean_monitoring = 0.0;
    std::optional<std::int64_t> service_completion_slot;
    std::vector<BacklogSample> backlog_trajectory;

    /// Announced open-slot outcomes in measured slots, indexed by OutcomeCode.
    std::array<std::int64_t, 4> open_outcomes{};
    std::int64_t true_type1 = 0; ///< type-1 collisions before misdetection
    std::array<std::int64_t, 4> resolutions{}; ///< indexed by ResolutionOutcome

    // Whole-run packet accounting.
    std::int64_t generated_total = 0;
    std::int64_t delivered_total = 0;
    std::int64_t in_system_final = 0;
};

enum class SlotState : std::uint8_t { Open, Closed1, Closed2 };
const char* to_string(SlotState s);

/// A packet selected to transmit in an open slot, with its chosen TO.
struct Transmission {
    UserState user;
    int to = 1;
};

/// Mutable state of one run. The backlog holds users eligible for the next
/// open slot; arrivals wait in `pending` until then.
struct SimState {
    SlotConfig cfg;
    double q = 0.0;
    std::int64_t slot = 0;
    SlotState slot_state = SlotState::Open;
    std::vector<UserState> backlog;
    std::vector<UserState> pending;
    std::vector<UserState> first_set; ///< retransmits in Closed1
    std::vector<UserState> last_set;  ///< retransmits in Closed2
    std::mt19937_64 rng;
    std::optional<EstimatorState> estimator;
    std::uint64_t next_id = 0;
};

SimState make_sim_state(const SlotConfig& cfg, double q, std::uint64_t seed);

/// Reports a true type-1 collision as type-2 with probability q.
ChannelOutcome apply_misdetection(const ChannelOutcome& outcome, double q, std::mt19937_64& rng);

struct OpenSlotResult {
    ChannelOutcome true_outcome;
    ChannelOutcome announced;
    FeedbackMessage feedback;
    std::vector<UserState> delivered;
    std::vector<UserState> returned; ///< back to contention after this slot
};

/**
 * Processes one open slot with the given transmissions. On an announced
 * type-1 collision, the users at the first and last TO are tagged and parked
 * in first_set / last_set and the state moves to Closed1; middle users are
 * returned. Throws InvariantError when the state is not Open.
 */
OpenSlotResult step_open_slot(SimState& state, std::vector<Transmission> transmissions);

struct ClosedSlotResult {
    bool success = false;
    std::vector<UserState> delivered;
    std::vector<UserState> returned;
};

/// Runs the next closed slot (Closed1 carries first_set, Closed2 last_set).
ClosedSlotResult step_closed_slot(SimState& state);

/// Outcome of the two closed slots from the sizes of the first and last
/// groups. Throws InvariantError for an empty group.
ResolutionOutcome resolve_type1(std::size_t first_count, std::size_t last_count);

/// Runs the scenario. An optional sink receives a per-slot CSV trace:
/// slot,state,outcome,backlog.
MetricsRecord simulate(const Scenario& scenario, std::ostream* trace = nullptr);

/// Mean of the backlog trajectory over samples with from <= slot < to.
double mean_backlog(const MetricsRecord& m, std::int64_t from, std::int64_t to);

/// Trajectory value at the first sample with slot >= at.
std::int64_t backlog_at(const MetricsRecord& m, std::int64_t at);

} // namespace toaloha
