#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace toaloha {

/// Raised for any parameter outside its admissible domain.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a simulation run breaks a protocol invariant.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/**
 * Slot geometry: K time offsets of length alpha followed by one packet
 * transmission time T. All times are in units of T unless T != 1.
 */
struct SlotConfig {
    int K = 1;
    double alpha = 0.0;
    double T = 1.0;
    double Ts = 1.0;    ///< (K-1)*alpha + T
    double gamma = 1.0; ///< T / Ts
};

/// Builds a SlotConfig; throws ConfigError unless K >= 1, alpha >= 0, T > 0
/// and alpha*(K-1) < T.
SlotConfig derive_slot_params(int K, double alpha, double T = 1.0);

// Probability helpers ------------------------------------------------------

/// C(n,i) p^i (1-p)^(n-i). Evaluated in log space for n > 50.
double binomial_pmf(std::int64_t i, std::int64_t n, double p);

/// nu^n e^{-nu} / n!
double poisson_pmf(std::int64_t n, double nu);

/// Truncation point N such that the Poisson(nu) mass above N is negligible
/// for the posterior computations: nu + 12 sqrt(nu) + 30.
double poisson_cutoff(double nu);

// Channel outcomes ---------------------------------------------------------

struct Idle {
    friend bool operator==(const Idle&, const Idle&) = default;
};

struct Success {
    friend bool operator==(const Success&, const Success&) = default;
};

/// At least two distinct TOs used. TO indices are 1-based.
struct Type1Collision {
    int first_to = 0;
    int last_to = 0;
    int first_count = 0;
    int last_count = 0;
    int total = 0;
    friend bool operator==(const Type1Collision&, const Type1Collision&) = default;
};

/// Every packet started at the same TO.
struct Type2Collision {
    int to = 0;
    int total = 0;
    friend bool operator==(const Type2Collision&, const Type2Collision&) = default;
};

using ChannelOutcome = std::variant<Idle, Success, Type1Collision, Type2Collision>;

/// Two-bit outcome code carried in the downlink feedback.
enum class OutcomeCode : std::uint8_t { Idle = 0, Success = 1, Type1 = 2, Type2 = 3 };

OutcomeCode outcome_code(const ChannelOutcome& outcome);
const char* to_string(OutcomeCode code);

/// Classifies the TOs chosen by the packets of one open slot.
/// Throws ConfigError if any index is outside 1..K.
ChannelOutcome classify_slot(std::span<const int> to_choices, int K);

/// Result of the two closed slots that follow a type-1 collision.
enum class ResolutionOutcome : std::uint8_t {
    Type0Success,      ///< both closed slots succeed
    Type1Success,      ///< only the first closed slot succeeds
    Type2Success,      ///< only the second closed slot succeeds
    ThreeSlotCollision ///< neither succeeds
};

int successes(ResolutionOutcome r);
const char* to_string(ResolutionOutcome r);

enum class NextSlotState : std::uint8_t { Open, ClosedForTwo };

struct FeedbackMessage {
    OutcomeCode outcome_code = OutcomeCode::Idle;
    std::optional<std::pair<int, int>> to_pair; ///< (first_to, last_to), type-1 only
    NextSlotState next_state = NextSlotState::Open;

    /// Accounting width: 2 bits for the code plus ceil(log2 K) bits per
    /// carried TO index.
    int payload_bits(int K) const;
};

FeedbackMessage make_feedback(const ChannelOutcome& outcome);

} // namespace toaloha
