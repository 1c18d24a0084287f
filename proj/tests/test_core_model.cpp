#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "toaloha/core_model.hpp"

using namespace toaloha;

TEST_CASE("derive_slot_params")
{
    const auto k1 = derive_slot_params(1, 0.07);
    CHECK(k1.Ts == 1.0);
    CHECK(k1.gamma == 1.0);

    const auto k6 = derive_slot_params(6, 0.07);
    CHECK(k6.Ts == doctest::Approx(1.35).epsilon(1e-12));
    CHECK(k6.gamma == doctest::Approx(1.0 / 1.35).epsilon(1e-12));

    CHECK(derive_slot_params(4, 0.30).Ts == doctest::Approx(1.9));
    CHECK_THROWS_AS(derive_slot_params(5, 0.30), ConfigError);
    CHECK_THROWS_AS(derive_slot_params(0, 0.01), ConfigError);
    CHECK_THROWS_AS(derive_slot_params(2, -0.1), ConfigError);
    CHECK_THROWS_AS(derive_slot_params(2, 0.1, 0.0), ConfigError);
    CHECK(derive_slot_params(1000, 0.0).gamma == 1.0);
}

TEST_CASE("binomial_pmf")
{
    CHECK(binomial_pmf(0, 7, 0.0) == 1.0);
    CHECK(binomial_pmf(1, 2, 0.5) == doctest::Approx(0.5));
    CHECK(binomial_pmf(3, 10, 0.3) == doctest::Approx(0.266827932).epsilon(1e-9));
    CHECK(binomial_pmf(5, 5, 1.0) == 1.0);
    CHECK_THROWS_AS(binomial_pmf(3, 2, 0.5), ConfigError);

    for (std::int64_t n : {1, 10, 50, 51, 200, 1000}) {
        for (double p : {0.001, 0.3, 0.9}) {
            double sum = 0.0;
            for (std::int64_t i = 0; i <= n; ++i)
                sum += binomial_pmf(i, n, p);
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        }
    }
    // Both evaluation paths agree across the n = 50 boundary.
    CHECK(binomial_pmf(20, 51, 0.4) ==
          doctest::Approx(binomial_pmf(20, 50, 0.4) * 0.6 + binomial_pmf(19, 50, 0.4) * 0.4)
              .epsilon(1e-12));
}

TEST_CASE("poisson_pmf")
{
    CHECK(poisson_pmf(0, 0.0) == 1.0);
    CHECK(poisson_pmf(3, 0.0) == 0.0);
    CHECK(poisson_pmf(1, 1.0) == doctest::Approx(std::exp(-1.0)));
    CHECK(poisson_pmf(5, 2.5) == doctest::Approx(0.0668009).epsilon(1e-6));
    for (double nu : {0.5, 2.0, 10.0, 100.0}) {
        double sum = 0.0;
        const auto cut = static_cast<std::int64_t>(poisson_cutoff(nu));
        for (std::int64_t n = 0; n <= cut; ++n)
            sum += poisson_pmf(n, nu);
        CHECK(sum >= 1.0 - 1e-9);
    }
}

TEST_CASE("classify_slot examples")
{
    CHECK(classify_slot(std::vector<int>{}, 4) == ChannelOutcome{Idle{}});
    CHECK(classify_slot(std::vector<int>{3}, 4) == ChannelOutcome{Success{}});
    CHECK(classify_slot(std::vector<int>{1, 1}, 4) == ChannelOutcome{Type2Collision{1, 2}});
    CHECK(classify_slot(std::vector<int>{2, 5, 5}, 6) == ChannelOutcome{Type1Collision{2, 5, 1, 2, 3}});
    CHECK_THROWS_AS(classify_slot(std::vector<int>{0}, 4), ConfigError);
    CHECK_THROWS_AS(classify_slot(std::vector<int>{5}, 4), ConfigError);
}

TEST_CASE("classify_slot properties")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 2000; ++trial) {
        const int K = 1 + static_cast<int>(rng() % 6);
        const int m = 2 + static_cast<int>(rng() % 6);
        std::vector<int> tos(static_cast<std::size_t>(m));
        for (auto& t : tos)
            t = 1 + static_cast<int>(rng() % static_cast<unsigned>(K));
        const auto out = classify_slot(tos, K);
        auto shuffled = tos;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        CHECK(classify_slot(shuffled, K) == out);

        const bool single = std::all_of(tos.begin(), tos.end(), [&](int t) { return t == tos[0]; });
        CHECK(std::holds_alternative<Type2Collision>(out) == single);
        CHECK(std::holds_alternative<Type1Collision>(out) == !single);
        if (const auto* c = std::get_if<Type1Collision>(&out)) {
            CHECK(c->first_to < c->last_to);
            CHECK(c->total == m);
            CHECK(c->first_count + c->last_count <= c->total);
        }
    }
}

TEST_CASE("resolution outcomes and feedback")
{
    CHECK(successes(ResolutionOutcome::Type0Success) == 2);
    CHECK(successes(ResolutionOutcome::Type1Success) == 1);
    CHECK(successes(ResolutionOutcome::Type2Success) == 1);
    CHECK(successes(ResolutionOutcome::ThreeSlotCollision) == 0);

    const auto fb = make_feedback(Type1Collision{2, 5, 1, 2, 3});
    CHECK(fb.outcome_code == OutcomeCode::Type1);
    REQUIRE(fb.to_pair.has_value());
    CHECK(*fb.to_pair == std::pair{2, 5});
    CHECK(fb.next_state == NextSlotState::ClosedForTwo);
    CHECK(fb.payload_bits(6) == 2 + 2 * 3);

    const auto idle = make_feedback(Idle{});
    CHECK_FALSE(idle.to_pair.has_value());
    CHECK(idle.next_state == NextSlotState::Open);
    CHECK(idle.payload_bits(6) == 2);
    CHECK(make_feedback(Type2Collision{1, 2}).next_state == NextSlotState::Open);
    CHECK(outcome_code(Success{}) == OutcomeCode::Success);
}
