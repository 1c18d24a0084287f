#include "toaloha/policies.hpp"

#include <algorithm>
#include <cmath>

#include "toaloha/detail/overloaded.hpp"

namespace toaloha {

using detail::overloaded;

EstimatorState make_estimator(double theta, double kappa, CollisionIncrement increment)
{
    if (!(theta > 0.0 && theta < 1.0))
        throw ConfigError("theta must lie in (0, 1)");
    if (!(kappa > 0.0))
        throw ConfigError("kappa must be > 0");
    EstimatorState st;
    st.theta = theta;
    st.kappa = kappa;
    st.increment = increment;
    st.nu = 1.0;
    st.lambda_hat = 0.0;
    st.L_prev = 1;
    st.p_star = 1.0;
    return st;
}

double collision_increment(double kappa, CollisionIncrement increment)
{
    const double denom = std::expm1(kappa) - kappa;
    return (increment == CollisionIncrement::Derived ? kappa * kappa : kappa) / denom;
}

EstimatorState estimator_update(const EstimatorState& st, OutcomeCode announced, int s)
{
    if (s < 0 || s > 2)
        throw ConfigError("closed-slot success count must be 0, 1 or 2");

    EstimatorState next = st;
    const double delivered = announced == OutcomeCode::Success ? 1.0
                             : announced == OutcomeCode::Type1 ? static_cast<double>(s)
                                                               : 0.0;
    next.lambda_hat = st.theta * st.lambda_hat + (1.0 - st.theta) * delivered / st.L_prev;

    const double bump = collision_increment(st.kappa, st.increment);
    int L = 1;
    switch (announced) {
    case OutcomeCode::Idle:
    case OutcomeCode::Success:
        next.nu = std::max(st.nu - st.kappa, 0.0);
        break;
    case OutcomeCode::Type1:
        next.nu = std::max(st.nu + bump, 2.0) - s;
        L = 3;
        break;
    case OutcomeCode::Type2:
        next.nu = std::max(st.nu + bump, 2.0);
        break;
    }
    next.nu += next.lambda_hat * L;
    next.nu = std::max(next.nu, 0.0);
    next.L_prev = L;
    next.p_star = next.nu > 0.0 ? std::min(st.kappa / next.nu, 1.0) : 1.0;
    return next;
}

double posterior_mean_oracle(double nu, double p, OutcomeClass outcome)
{
    if (!(nu > 0.0))
        throw ConfigError("posterior_mean_oracle: nu must be > 0");
    if (!(p >= 0.0 && p <= 1.0))
        throw ConfigError("posterior_mean_oracle: p must lie in [0, 1]");
    switch (outcome) {
    case OutcomeClass::Idle: return nu * (1.0 - p);
    case OutcomeClass::Success: return nu * (1.0 - p) + 1.0;
    case OutcomeClass::Collision: {
        const double k = nu * p;
        if (k == 0.0)
            throw ConfigError("posterior_mean_oracle: collision impossible at nu*p = 0");
        return nu + k * k / (std::expm1(k) - k);
    }
    }
    return nu;
}

int window_size(double p_star)
{
    if (!(p_star > 0.0 && p_star <= 1.0))
        throw ConfigError("window_size: p* must lie in (0, 1]");
    const double w = std::ceil(2.0 / p_star);
    if (w > 1e9)
        throw ConfigError("window_size: p* too small");
    return std::max(2, static_cast<int>(w));
}

void validate(const PolicyDescriptor& policy)
{
    auto check_bayes = [](double theta, double kappa) {
        if (!(theta > 0.0 && theta < 1.0))
            throw ConfigError("theta must lie in (0, 1)");
        if (!(kappa >= 0.0) || !std::isfinite(kappa))
            throw ConfigError("kappa must be > 0 (or 0 for the optimal value)");
    };
    std::visit(overloaded{
                   [](const FixedP& f) {
                       if (!(f.p > 0.0 && f.p <= 1.0))
                           throw ConfigError("p must lie in (0, 1]");
                   },
                   [&](const BayesP& b) { check_bayes(b.theta, b.kappa); },
                   [&](const BayesWindow& b) { check_bayes(b.theta, b.kappa); },
                   [](const Genie&) {},
               },
               policy);
}

std::string policy_name(const PolicyDescriptor& policy)
{
    return std::visit(overloaded{
                          [](const FixedP&) { return std::string("fixed"); },
                          [](const BayesP&) { return std::string("bayes_p"); },
                          [](const BayesWindow&) { return std::string("bayes_window"); },
                          [](const Genie&) { return std::string("genie"); },
                      },
                      policy);
}

std::int64_t draw_backoff_counter(int U, std::mt19937_64& rng)
{
    if (U < 1)
        throw ConfigError("window size must be >= 1");
    return std::uniform_int_distribution<std::int64_t>(0, U - 1)(rng);
}

Decision user_decision(const PolicyDescriptor& policy, UserState& user, const BroadcastView& view,
                       std::mt19937_64& rng)
{
    auto pick_to = [&] { return std::uniform_int_distribution<int>(1, view.K)(rng); };

    if (std::holds_alternative<BayesWindow>(policy)) {
        if (user.monitoring) {
            if (!view.slot_open)
                return Hold{};
            user.backoff_counter = draw_backoff_counter(view.U, rng);
            user.monitoring = false;
        }
        if (user.backoff_counter == 0) {
            if (view.slot_open)
                return Transmit{pick_to()};
            // Expired inside a closed slot: wait for the next broadcast.
            user.monitoring = true;
            return Hold{};
        }
        --user.backoff_counter;
        return Hold{};
    }

    if (!view.slot_open)
        return Hold{};
    if (std::bernoulli_distribution(std::clamp(view.p, 0.0, 1.0))(rng))
        return Transmit{pick_to()};
    return Hold{};
}

} // namespace toaloha
