#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "toaloha/traffic.hpp"

using namespace toaloha;
using namespace toaloha::traffic;

TEST_CASE("poisson arrivals")
{
    std::mt19937_64 rng(1);
    const auto none = poisson_arrivals(0.0, derive_slot_params(1, 0.0), 1000, rng);
    CHECK(std::all_of(none.begin(), none.end(), [](auto c) { return c == 0; }));

    const auto counts = poisson_arrivals(0.3, derive_slot_params(1, 0.0), 100000, rng);
    const double mean = std::accumulate(counts.begin(), counts.end(), 0.0) / counts.size();
    CHECK(mean == doctest::Approx(0.3).epsilon(0.005 / 0.3));

    SlotConfig g08 = derive_slot_params(2, 0.25); // Ts = 1.25, gamma = 0.8
    CHECK(g08.gamma == doctest::Approx(0.8));
    ArrivalProcess proc(Poisson{0.3}, g08);
    CHECK(proc.mean_arrivals(0) == doctest::Approx(0.375));
}

TEST_CASE("beta activation rates")
{
    const auto rates = beta_activation_rates(1000, 3.0, 4.0, 1000.0, 1000);
    CHECK(std::accumulate(rates.begin(), rates.end(), 0.0) == doctest::Approx(1000.0).epsilon(1e-9));
    const auto peak = std::max_element(rates.begin(), rates.end()) - rates.begin();
    CHECK(static_cast<double>(peak) == doctest::Approx(400.0).epsilon(0.01));
    CHECK(rates[399] == doctest::Approx(2.0736).epsilon(1e-3));
    CHECK(std::all_of(rates.begin(), rates.end(), [](double r) { return r >= 0.0; }));
    CHECK_THROWS_AS(beta_activation_rates(1000, 0.0, 4.0, 1000.0, 10), ConfigError);
}

TEST_CASE("beta arrivals total near N")
{
    const SlotConfig cfg = derive_slot_params(4, 0.04);
    for (bool exact : {false, true}) {
        BetaActivation b;
        b.exact_count = exact;
        ArrivalProcess proc(b, cfg);
        std::mt19937_64 rng(9);
        std::vector<double> out;
        const auto slots = beta_slot_count(b, cfg);
        CHECK(slots == std::llround(1000.0 / cfg.Ts));
        for (std::int64_t t = 0; t < slots + 10; ++t) {
            const auto before = out.size();
            proc.arrivals_in_slot(t, rng, out);
            for (auto i = before; i < out.size(); ++i) {
                CHECK(out[i] >= t * cfg.Ts);
                CHECK(out[i] < (t + 1) * cfg.Ts);
            }
            CHECK(std::is_sorted(out.begin() + static_cast<std::ptrdiff_t>(before), out.end()));
        }
        const double n = static_cast<double>(out.size());
        if (exact)
            CHECK(n == 1000.0);
        else
            CHECK(std::abs(n - 1000.0) <= 3.0 * std::sqrt(1000.0));
        CHECK(proc.finished_by(slots));
        CHECK_FALSE(proc.finished_by(slots - 1));
    }
}

TEST_CASE("stepped lambda")
{
    const SteppedLambda s;
    CHECK(stepped_lambda(s, 0) == doctest::Approx(0.039));
    CHECK(stepped_lambda(s, 9999) == doctest::Approx(0.039));
    CHECK(stepped_lambda(s, 10000) == doctest::Approx(0.078));
    CHECK(stepped_lambda(s, 100000) == doctest::Approx(0.429));
    CHECK(stepped_lambda(s, 110000) == doctest::Approx(0.390));
    CHECK(stepped_lambda(s, 200000) == doctest::Approx(0.039));
    CHECK(stepped_lambda(s, 10000000) == doctest::Approx(0.039));
    double peak = 0.0;
    for (std::int64_t t = 0; t < 300000; t += 1000)
        peak = std::max(peak, stepped_lambda(s, t));
    CHECK(peak == doctest::Approx(0.429));
}

TEST_CASE("generators are deterministic")
{
    const SlotConfig cfg = derive_slot_params(3, 0.05);
    auto draw = [&](std::uint64_t seed) {
        ArrivalProcess proc(Poisson{0.4}, cfg);
        std::mt19937_64 rng(seed);
        std::vector<double> out;
        for (int t = 0; t < 500; ++t)
            proc.arrivals_in_slot(t, rng, out);
        return out;
    };
    CHECK(draw(4) == draw(4));
    CHECK(draw(4) != draw(5));
}

TEST_CASE("traffic validation")
{
    CHECK_THROWS_AS(validate(TrafficDescriptor{Saturated{0}}), ConfigError);
    CHECK_THROWS_AS(validate(TrafficDescriptor{Poisson{-1.0}}), ConfigError);
    CHECK(traffic_name(SteppedLambda{}) == "stepped");
}
