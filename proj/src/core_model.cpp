#include "toaloha/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace toaloha {

SlotConfig derive_slot_params(int K, double alpha, double T)
{
    if (K < 1)
        throw ConfigError("K must be >= 1 (got " + std::to_string(K) + ")");
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
        throw ConfigError("alpha must be a finite value >= 0");
    if (!(T > 0.0) || !std::isfinite(T))
        throw ConfigError("T must be a finite value > 0");
    if (!(alpha * (K - 1) < T))
        throw ConfigError("alpha*(K-1) < T violated: alpha*(K-1) = " +
                          std::to_string(alpha * (K - 1)) + ", T = " + std::to_string(T));

    SlotConfig cfg;
    cfg.K = K;
    cfg.alpha = alpha;
    cfg.T = T;
    cfg.Ts = (K - 1) * alpha + T;
    cfg.gamma = T / cfg.Ts;
    return cfg;
}

double binomial_pmf(std::int64_t i, std::int64_t n, double p)
{
    if (n < 0 || i < 0 || i > n || !(p >= 0.0 && p <= 1.0))
        throw ConfigError("binomial_pmf: need 0 <= i <= n and p in [0,1]");
    if (p == 0.0)
        return i == 0 ? 1.0 : 0.0;
    if (p == 1.0)
        return i == n ? 1.0 : 0.0;

    if (n <= 50) {
        // The running product stays an exact integer for n <= 50.
        double coeff = 1.0;
        const std::int64_t k = std::min(i, n - i);
        for (std::int64_t j = 1; j <= k; ++j)
            coeff = coeff * static_cast<double>(n - k + j) / static_cast<double>(j);
        return coeff * std::pow(p, static_cast<double>(i)) *
               std::pow(1.0 - p, static_cast<double>(n - i));
    }

    const double log_coeff = std::lgamma(static_cast<double>(n) + 1.0) -
                             std::lgamma(static_cast<double>(i) + 1.0) -
                             std::lgamma(static_cast<double>(n - i) + 1.0);
    return std::exp(log_coeff + static_cast<double>(i) * std::log(p) +
                    static_cast<double>(n - i) * std::log1p(-p));
}

double poisson_pmf(std::int64_t n, double nu)
{
    if (n < 0 || !(nu >= 0.0))
        throw ConfigError("poisson_pmf: need n >= 0 and nu >= 0");
    if (nu == 0.0)
        return n == 0 ? 1.0 : 0.0;
    return std::exp(static_cast<double>(n) * std::log(nu) - nu -
                    std::lgamma(static_cast<double>(n) + 1.0));
}

double poisson_cutoff(double nu)
{
    return nu + 12.0 * std::sqrt(nu) + 30.0;
}

OutcomeCode outcome_code(const ChannelOutcome& outcome)
{
    switch (outcome.index()) {
    case 0: return OutcomeCode::Idle;
    case 1: return OutcomeCode::Success;
    case 2: return OutcomeCode::Type1;
    default: return OutcomeCode::Type2;
    }
}

const char* to_string(OutcomeCode code)
{
    switch (code) {
    case OutcomeCode::Idle: return "idle";
    case OutcomeCode::Success: return "success";
    case OutcomeCode::Type1: return "type1";
    case OutcomeCode::Type2: return "type2";
    }
    return "?";
}

ChannelOutcome classify_slot(std::span<const int> to_choices, int K)
{
    int lo = K + 1;
    int hi = 0;
    for (int to : to_choices) {
        if (to < 1 || to > K)
            throw ConfigError("TO index " + std::to_string(to) + " outside 1.." +
                              std::to_string(K));
        lo = std::min(lo, to);
        hi = std::max(hi, to);
    }

    const auto total = static_cast<int>(to_choices.size());
    if (total == 0)
        return Idle{};
    if (total == 1)
        return Success{};
    if (lo == hi)
        return Type2Collision{lo, total};

    Type1Collision c;
    c.first_to = lo;
    c.last_to = hi;
    c.total = total;
    c.first_count = static_cast<int>(std::count(to_choices.begin(), to_choices.end(), lo));
    c.last_count = static_cast<int>(std::count(to_choices.begin(), to_choices.end(), hi));
    return c;
}

int successes(ResolutionOutcome r)
{
    switch (r) {
    case ResolutionOutcome::Type0Success: return 2;
    case ResolutionOutcome::Type1Success:
    case ResolutionOutcome::Type2Success: return 1;
    case ResolutionOutcome::ThreeSlotCollision: return 0;
    }
    return 0;
}

const char* to_string(ResolutionOutcome r)
{
    switch (r) {
    case ResolutionOutcome::Type0Success: return "type0-success";
    case ResolutionOutcome::Type1Success: return "type1-success";
    case ResolutionOutcome::Type2Success: return "type2-success";
    case ResolutionOutcome::ThreeSlotCollision: return "three-slot-collision";
    }
    return "?";
}

int FeedbackMessage::payload_bits(int K) const
{
    if (!to_pair)
        return 2;
    const int index_bits = K <= 1 ? 0 : static_cast<int>(std::ceil(std::log2(K)));
    return 2 + 2 * index_bits;
}

FeedbackMessage make_feedback(const ChannelOutcome& outcome)
{
    FeedbackMessage msg;
    msg.outcome_code = outcome_code(outcome);
    if (const auto* c1 = std::get_if<Type1Collision>(&outcome)) {
        msg.to_pair = std::make_pair(c1->first_to, c1->last_to);
        msg.next_state = NextSlotState::ClosedForTwo;
    }
    return msg;
}

} // namespace toaloha
