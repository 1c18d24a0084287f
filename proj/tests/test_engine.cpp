#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "toaloha/analysis.hpp"
#include "toaloha/engine.hpp"

using namespace toaloha;

namespace {

std::vector<Transmission> with_tos(std::initializer_list<int> tos)
{
    std::vector<Transmission> tx;
    std::uint64_t id = 0;
    for (int to : tos) {
        UserState u;
        u.id = id++;
        tx.push_back({u, to});
    }
    return tx;
}

Scenario saturated(int K, double alpha, std::int64_t n, double p, std::int64_t horizon, std::uint64_t seed = 1)
{
    Scenario sc;
    sc.cfg = derive_slot_params(K, alpha);
    sc.policy = FixedP{p};
    sc.traffic = traffic::Saturated{n};
    sc.horizon = horizon;
    sc.warmup = 100;
    sc.seed = seed;
    return sc;
}

Scenario poisson(PolicyDescriptor policy, double lambda, std::int64_t horizon, std::uint64_t seed = 1)
{
    Scenario sc;
    sc.cfg = derive_slot_params(4, 0.04);
    sc.policy = std::move(policy);
    sc.traffic = traffic::Poisson{lambda};
    sc.horizon = horizon;
    sc.warmup = 1000;
    sc.seed = seed;
    return sc;
}

} // namespace

TEST_CASE("open slot examples")
{
    SimState st = make_sim_state(derive_slot_params(6, 0.07), 0.0, 1);

    auto idle = step_open_slot(st, {});
    CHECK(std::holds_alternative<Idle>(idle.announced));
    CHECK(st.slot_state == SlotState::Open);

    auto one = step_open_slot(st, with_tos({3}));
    CHECK(std::holds_alternative<Success>(one.announced));
    CHECK(one.delivered.size() == 1);

    auto c2 = step_open_slot(st, with_tos({4, 4}));
    CHECK(std::holds_alternative<Type2Collision>(c2.announced));
    CHECK(c2.returned.size() == 2);
    CHECK(st.slot_state == SlotState::Open);

    auto c1 = step_open_slot(st, with_tos({2, 5, 5}));
    REQUIRE(std::holds_alternative<Type1Collision>(c1.announced));
    REQUIRE(c1.feedback.to_pair.has_value());
    CHECK(*c1.feedback.to_pair == std::pair{2, 5});
    CHECK(st.slot_state == SlotState::Closed1);
    CHECK(st.first_set.size() == 1);
    CHECK(st.last_set.size() == 2);
    CHECK(st.first_set[0].role_tag == RoleTag::FirstRetransmitter);
    CHECK(st.last_set[0].role_tag == RoleTag::LastRetransmitter);
    CHECK_THROWS_AS(step_open_slot(st, with_tos({1})), InvariantError);

    auto s1 = step_closed_slot(st);
    CHECK(s1.success);
    CHECK(s1.delivered.size() == 1);
    CHECK(s1.delivered[0].role_tag == RoleTag::None);
    CHECK(st.slot_state == SlotState::Closed2);
    auto s2 = step_closed_slot(st);
    CHECK_FALSE(s2.success);
    CHECK(s2.returned.size() == 2);
    CHECK(s2.returned[0].role_tag == RoleTag::None);
    CHECK(st.slot_state == SlotState::Open);
    CHECK_THROWS_AS(step_closed_slot(st), InvariantError);
    CHECK(st.slot == 6);
}

TEST_CASE("middle transmitters return at once")
{
    SimState st = make_sim_state(derive_slot_params(6, 0.07), 0.0, 1);
    auto r = step_open_slot(st, with_tos({1, 3, 3, 6}));
    CHECK(r.returned.size() == 2);
    CHECK(st.first_set.size() == 1);
    CHECK(st.last_set.size() == 1);
}

TEST_CASE("misdetection filter")
{
    std::mt19937_64 rng(2);
    const ChannelOutcome c1 = Type1Collision{1, 3, 1, 1, 2};
    for (const ChannelOutcome& o : {ChannelOutcome{Idle{}}, ChannelOutcome{Success{}}, c1,
                                    ChannelOutcome{Type2Collision{2, 3}}})
        CHECK(apply_misdetection(o, 0.0, rng) == o);
    CHECK(std::holds_alternative<Type2Collision>(apply_misdetection(c1, 1.0, rng)));
    CHECK(apply_misdetection(ChannelOutcome{Type2Collision{2, 3}}, 1.0, rng) == ChannelOutcome{Type2Collision{2, 3}});

    int kept = 0;
    const int trials = 100000;
    for (int i = 0; i < trials; ++i)
        kept += std::holds_alternative<Type1Collision>(apply_misdetection(c1, 0.5, rng));
    CHECK(static_cast<double>(kept) / trials == doctest::Approx(0.5).epsilon(0.02));

    SimState st = make_sim_state(derive_slot_params(4, 0.04), 1.0, 1);
    auto r = step_open_slot(st, with_tos({1, 4}));
    CHECK(std::holds_alternative<Type1Collision>(r.true_outcome));
    CHECK(std::holds_alternative<Type2Collision>(r.announced));
    CHECK(r.returned.size() == 2);
    CHECK(st.slot_state == SlotState::Open);
}

TEST_CASE("type-1 resolution")
{
    CHECK(resolve_type1(1, 1) == ResolutionOutcome::Type0Success);
    CHECK(successes(resolve_type1(1, 1)) == 2);
    CHECK(resolve_type1(1, 2) == ResolutionOutcome::Type1Success);
    CHECK(resolve_type1(3, 1) == ResolutionOutcome::Type2Success);
    CHECK(resolve_type1(2, 3) == ResolutionOutcome::ThreeSlotCollision);
    CHECK_THROWS_AS(resolve_type1(0, 1), InvariantError);
}

TEST_CASE("saturated simulation examples")
{
    for (int K : {1, 3, 6}) {
        const auto m = simulate(saturated(K, 0.07, 1, 1.0, 5000));
        CHECK(m.throughput == doctest::Approx(derive_slot_params(K, 0.07).gamma).epsilon(1e-12));
        CHECK(std::isnan(m.avg_delay));
        CHECK(m.avg_backlog == doctest::Approx(1.0));
    }
    const SlotConfig k2 = derive_slot_params(2, 0.07);
    CHECK(simulate(saturated(2, 0.07, 2, 1.0, 100000)).throughput == doctest::Approx(0.5 * k2.gamma).epsilon(0.01 / 0.47));

    const SlotConfig k3 = derive_slot_params(3, 0.07);
    const double eq1 = analysis::throughput_saturated(100, 0.03, k3);
    CHECK(std::abs(simulate(saturated(3, 0.07, 100, 0.03, 100000)).throughput - eq1) <= 0.01);
}

TEST_CASE("outcome frequencies match the renewal terms")
{
    const int K = 3;
    const std::int64_t n = 20;
    const double p = 0.08;
    const auto m = simulate(saturated(K, 0.07, n, p, 100000, 17));
    const auto r = analysis::renewal_terms(n, p, K);
    double opens = 0.0;
    for (auto c : m.open_outcomes)
        opens += static_cast<double>(c);
    const double expected[] = {r.pr_idle, r.pr_success, r.pr_type1, r.pr_type2};
    for (int i = 0; i < 4; ++i) {
        const double f = static_cast<double>(m.open_outcomes[static_cast<std::size_t>(i)]) / opens;
        const double se = std::sqrt(expected[i] * (1.0 - expected[i]) / opens);
        CHECK(std::abs(f - expected[i]) <= 3.0 * se + 1e-12);
    }
    CHECK(m.true_type1 == m.open_outcomes[2]);
}

TEST_CASE("cycle structure in the trace")
{
    std::ostringstream trace;
    simulate(saturated(4, 0.04, 10, 0.15, 3000, 3), &trace);
    std::istringstream in(trace.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "slot,state,outcome,backlog");
    std::vector<std::string> states, outcomes;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string slot, state, outcome;
        std::getline(ss, slot, ',');
        std::getline(ss, state, ',');
        std::getline(ss, outcome, ',');
        CHECK(std::stoll(slot) == static_cast<long long>(states.size()));
        states.push_back(state);
        outcomes.push_back(outcome);
    }
    REQUIRE(states.size() >= 3000);
    int type1 = 0;
    for (std::size_t i = 0; i + 2 < states.size(); ++i) {
        if (states[i] == "open" && outcomes[i] == "type1") {
            ++type1;
            CHECK(states[i + 1] == "closed1");
            CHECK(states[i + 2] == "closed2");
            if (i + 3 < states.size())
                CHECK(states[i + 3] == "open");
        }
        if (states[i] == "closed1")
            CHECK((i > 0 && outcomes[i - 1] == "type1"));
    }
    CHECK(type1 > 0);
}

TEST_CASE("determinism and conservation")
{
    const auto sc = poisson(BayesP{}, 0.3, 20000, 99);
    const auto a = simulate(sc);
    const auto b = simulate(sc);
    CHECK(a.successes == b.successes);
    CHECK(a.sum_delay == b.sum_delay);
    CHECK(a.backlog_trajectory.size() == b.backlog_trajectory.size());
    CHECK(a.generated_total == a.delivered_total + a.in_system_final);
    auto c = sc;
    c.seed = 100;
    CHECK(simulate(c).sum_delay != a.sum_delay);
}

TEST_CASE("stable runs satisfy Little's law")
{
    const double tau = derive_slot_params(4, 0.04).gamma * analysis::optimal_kappa(4).tau_star;
    for (const PolicyDescriptor& pol : {PolicyDescriptor{BayesP{}}, PolicyDescriptor{BayesWindow{}},
                                        PolicyDescriptor{Genie{}}}) {
        const auto m = simulate(poisson(pol, 0.6 * tau, 100000, 5));
        CHECK(m.throughput == doctest::Approx(0.6 * tau).epsilon(0.05));
        CHECK(m.avg_backlog == doctest::Approx(m.throughput * m.avg_delay).epsilon(0.05));
        CHECK(m.mean_monitoring > 0.0);
    }
}

TEST_CASE("misdetection everywhere removes closed slots")
{
    auto sc = saturated(4, 0.04, 10, 0.1, 50000, 8);
    sc.q = 1.0;
    const auto m = simulate(sc);
    CHECK(m.open_outcomes[2] == 0);
    CHECK(m.true_type1 > 0);
    const double b1 = 10 * 0.1 * std::pow(0.9, 9);
    CHECK(m.throughput == doctest::Approx(sc.cfg.gamma * b1).epsilon(0.03));
}

TEST_CASE("scenario validation")
{
    auto sc = poisson(BayesP{}, 0.1, 1000);
    sc.q = 1.5;
    CHECK_THROWS_AS(simulate(sc), ConfigError);
    sc.q = 0.0;
    sc.warmup = 1000;
    CHECK_THROWS_AS(simulate(sc), ConfigError);
    sc.horizon = 0;
    sc.warmup = 0;
    const auto m = simulate(sc);
    CHECK(m.slots_elapsed == 0);
    CHECK(m.successes == 0);
}
