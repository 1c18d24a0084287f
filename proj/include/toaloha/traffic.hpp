#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "toaloha/core_model.hpp"

namespace toaloha::traffic {

/// n users that always hold a packet.
struct Saturated {
    std::int64_t n = 1;
};

/// Poisson arrivals; lambda in packets per T.
struct Poisson {
    double lambda = 0.0;
};

/// Piecewise-constant rate that climbs by `step` every `period_slots` from
/// `base` up to `peak`, then descends back to `base` and stays there.
struct SteppedLambda {
    double base = 0.039;
    double step = 0.039;
    std::int64_t period_slots = 10000;
    double peak = 0.429;
};

/// N devices activated over (0, T_A) with a Beta(a, b) shaped density.
/// I_A = 0 picks round(T_A / Ts) slots. With exact_count the N activation
/// times are sampled individually; otherwise each slot draws Poisson(lambda_i).
struct BetaActivation {
    std::int64_t N = 1000;
    double a = 3.0;
    double b = 4.0;
    double T_A = 1000.0;
    std::int64_t I_A = 0;
    bool exact_count = false;
};

using TrafficDescriptor = std::variant<Saturated, Poisson, SteppedLambda, BetaActivation>;

void validate(const TrafficDescriptor& traffic);
std::string traffic_name(const TrafficDescriptor& traffic);

/// Independent Poisson counts per slot with mean lambda * Ts / T.
std::vector<std::int64_t> poisson_arrivals(double lambda, const SlotConfig& cfg, std::int64_t slots,
                                           std::mt19937_64& rng);

/// lambda_i = N * integral of the Beta density over the i-th of I_A equal
/// sub-intervals of (0, T_A).
std::vector<double> beta_activation_rates(std::int64_t N, double a, double b, double T_A,
                                          std::int64_t I_A);

/// Rate (packets per T) in force during slot t.
double stepped_lambda(const SteppedLambda& s, std::int64_t t);

/// Number of activation slots used for a BetaActivation under `cfg`.
std::int64_t beta_slot_count(const BetaActivation& beta, const SlotConfig& cfg);

/**
 * Per-run arrival generator. Emits absolute arrival timestamps (units of
 * T, ascending within a slot) for each slot in turn.
 */
class ArrivalProcess {
public:
    ArrivalProcess(TrafficDescriptor traffic, const SlotConfig& cfg);

    /// Appends the timestamps of packets generated during slot t.
    void arrivals_in_slot(std::int64_t t, std::mt19937_64& rng, std::vector<double>& out);

    bool saturated() const { return std::holds_alternative<Saturated>(traffic_); }
    std::int64_t saturated_users() const;

    /// True when no arrival can occur at or after slot t.
    bool finished_by(std::int64_t t) const;

    /// Expected per-slot mean at slot t (zero for saturated traffic).
    double mean_arrivals(std::int64_t t) const;

private:
    void sample_exact_beta(std::mt19937_64& rng);
    void append_uniform(std::int64_t t, std::int64_t count, std::mt19937_64& rng,
                        std::vector<double>& out) const;

    TrafficDescriptor traffic_;
    SlotConfig cfg_;
    std::vector<double> beta_rates_;
    std::vector<std::vector<double>> exact_times_; // per slot, exact-count Beta only
    bool exact_ready_ = false;
};

} // namespace toaloha::traffic
