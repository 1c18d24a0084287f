#include "toaloha/traffic.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/special_functions/beta.hpp>

#include "toaloha/detail/overloaded.hpp"

namespace toaloha::traffic {

using detail::overloaded;

void validate(const TrafficDescriptor& traffic)
{
    std::visit(overloaded{
                   [](const Saturated& s) {
                       if (s.n < 1)
                           throw ConfigError("n must be >= 1");
                   },
                   [](const Poisson& p) {
                       if (!(p.lambda >= 0.0) || !std::isfinite(p.lambda))
                           throw ConfigError("lambda must be a finite value >= 0");
                   },
                   [](const SteppedLambda& s) {
                       if (!(s.base >= 0.0 && s.step >= 0.0 && s.peak >= s.base))
                           throw ConfigError("stepped lambda needs 0 <= base <= peak and step >= 0");
                       if (s.period_slots < 1)
                           throw ConfigError("stepped lambda period must be >= 1 slot");
                   },
                   [](const BetaActivation& b) {
                       if (b.N < 1)
                           throw ConfigError("N must be >= 1");
                       if (!(b.a > 0.0 && b.b > 0.0))
                           throw ConfigError("beta shape parameters a, b must be > 0");
                       if (!(b.T_A > 0.0))
                           throw ConfigError("T_A must be > 0");
                       if (b.I_A < 0)
                           throw ConfigError("I_A must be >= 1 (or 0 for automatic)");
                   },
               },
               traffic);
}

std::string traffic_name(const TrafficDescriptor& traffic)
{
    return std::visit(overloaded{
                          [](const Saturated&) { return std::string("saturated"); },
                          [](const Poisson&) { return std::string("poisson"); },
                          [](const SteppedLambda&) { return std::string("stepped"); },
                          [](const BetaActivation&) { return std::string("beta"); },
                      },
                      traffic);
}

std::vector<std::int64_t> poisson_arrivals(double lambda, const SlotConfig& cfg, std::int64_t slots,
                                           std::mt19937_64& rng)
{
    if (!(lambda >= 0.0))
        throw ConfigError("lambda must be >= 0");
    std::vector<std::int64_t> counts(static_cast<std::size_t>(std::max<std::int64_t>(slots, 0)), 0);
    const double mean = lambda * cfg.Ts / cfg.T;
    if (mean == 0.0)
        return counts;
    std::poisson_distribution<std::int64_t> dist(mean);
    for (auto& c : counts)
        c = dist(rng);
    return counts;
}

std::vector<double> beta_activation_rates(std::int64_t N, double a, double b, double T_A,
                                          std::int64_t I_A)
{
    validate(BetaActivation{N, a, b, T_A, I_A, false});
    if (I_A < 1)
        throw ConfigError("I_A must be >= 1");

    std::vector<double> rates(static_cast<std::size_t>(I_A));
    double prev = 0.0;
    for (std::int64_t i = 1; i <= I_A; ++i) {
        const double x = i == I_A ? 1.0 : static_cast<double>(i) / static_cast<double>(I_A);
        const double cdf = boost::math::ibeta(a, b, x);
        rates[i - 1] = static_cast<double>(N) * (cdf - prev);
        prev = cdf;
    }
    return rates;
}

double stepped_lambda(const SteppedLambda& s, std::int64_t t)
{
    if (t < 0)
        return s.base;
    const std::int64_t level = t / s.period_slots;
    const auto steps_up =
        s.step > 0.0 ? static_cast<std::int64_t>(std::llround((s.peak - s.base) / s.step)) : 0;
    if (level <= steps_up)
        return s.base + static_cast<double>(level) * s.step;
    if (level <= 2 * steps_up)
        return s.base + static_cast<double>(2 * steps_up - level) * s.step;
    return s.base;
}

std::int64_t beta_slot_count(const BetaActivation& beta, const SlotConfig& cfg)
{
    if (beta.I_A > 0)
        return beta.I_A;
    return std::max<std::int64_t>(1, std::llround(beta.T_A / cfg.Ts));
}

ArrivalProcess::ArrivalProcess(TrafficDescriptor traffic, const SlotConfig& cfg)
    : traffic_(std::move(traffic)), cfg_(cfg)
{
    validate(traffic_);
    if (const auto* beta = std::get_if<BetaActivation>(&traffic_)) {
        const auto slots = beta_slot_count(*beta, cfg_);
        beta_rates_ = beta_activation_rates(beta->N, beta->a, beta->b, beta->T_A, slots);
    }
}

std::int64_t ArrivalProcess::saturated_users() const
{
    if (const auto* s = std::get_if<Saturated>(&traffic_))
        return s->n;
    return 0;
}

bool ArrivalProcess::finished_by(std::int64_t t) const
{
    if (std::holds_alternative<BetaActivation>(traffic_))
        return t >= static_cast<std::int64_t>(beta_rates_.size());
    if (const auto* p = std::get_if<Poisson>(&traffic_))
        return p->lambda == 0.0;
    return false;
}

double ArrivalProcess::mean_arrivals(std::int64_t t) const
{
    const double scale = cfg_.Ts / cfg_.T;
    return std::visit(overloaded{
                          [](const Saturated&) { return 0.0; },
                          [&](const Poisson& p) { return p.lambda * scale; },
                          [&](const SteppedLambda& s) { return stepped_lambda(s, t) * scale; },
                          [&](const BetaActivation&) {
                              if (t < 0 || t >= static_cast<std::int64_t>(beta_rates_.size()))
                                  return 0.0;
                              return beta_rates_[static_cast<std::size_t>(t)];
                          },
                      },
                      traffic_);
}

void ArrivalProcess::append_uniform(std::int64_t t, std::int64_t count, std::mt19937_64& rng,
                                    std::vector<double>& out) const
{
    if (count <= 0)
        return;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto first = out.size();
    const double start = static_cast<double>(t) * cfg_.Ts;
    for (std::int64_t k = 0; k < count; ++k)
        out.push_back(start + unit(rng) * cfg_.Ts);
    std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end());
}

void ArrivalProcess::sample_exact_beta(std::mt19937_64& rng)
{
    const auto& beta = std::get<BetaActivation>(traffic_);
    const auto slots = beta_rates_.size();
    exact_times_.assign(slots, {});
    std::gamma_distribution<double> ga(beta.a, 1.0);
    std::gamma_distribution<double> gb(beta.b, 1.0);
    for (std::int64_t k = 0; k < beta.N; ++k) {
        const double x = ga(rng);
        const double y = gb(rng);
        const double u = x / (x + y); // Beta(a, b) on (0, 1)
        const double pos = u * static_cast<double>(slots);
        const auto slot = std::min(slots - 1, static_cast<std::size_t>(pos));
        const double frac = pos - static_cast<double>(slot);
        exact_times_[slot].push_back((static_cast<double>(slot) + frac) * cfg_.Ts);
    }
    for (auto& v : exact_times_)
        std::sort(v.begin(), v.end());
    exact_ready_ = true;
}

void ArrivalProcess::arrivals_in_slot(std::int64_t t, std::mt19937_64& rng, std::vector<double>& out)
{
    std::visit(overloaded{
                   [](const Saturated&) {},
                   [&](const Poisson& p) {
                       const double mean = p.lambda * cfg_.Ts / cfg_.T;
                       if (mean > 0.0)
                           append_uniform(t, std::poisson_distribution<std::int64_t>(mean)(rng), rng,
                                          out);
                   },
                   [&](const SteppedLambda& s) {
                       const double mean = stepped_lambda(s, t) * cfg_.Ts / cfg_.T;
                       if (mean > 0.0)
                           append_uniform(t, std::poisson_distribution<std::int64_t>(mean)(rng), rng,
                                          out);
                   },
                   [&](const BetaActivation& b) {
                       if (t < 0 || t >= static_cast<std::int64_t>(beta_rates_.size()))
                           return;
                       if (b.exact_count) {
                           if (!exact_ready_)
                               sample_exact_beta(rng);
                           const auto& v = exact_times_[static_cast<std::size_t>(t)];
                           out.insert(out.end(), v.begin(), v.end());
                           return;
                       }
                       const double mean = beta_rates_[static_cast<std::size_t>(t)];
                       if (mean > 0.0)
                           append_uniform(t, std::poisson_distribution<std::int64_t>(mean)(rng), rng,
                                          out);
                   },
               },
               traffic_);
}

} // namespace toaloha::traffic
