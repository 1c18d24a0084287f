#include "toaloha/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <utility>

#include "toaloha/analysis.hpp"
#include "toaloha/detail/overloaded.hpp"
#include "toaloha/detail/seed.hpp"

namespace toaloha {

using detail::overloaded;

const char* to_string(SlotState s)
{
    switch (s) {
    case SlotState::Open: return "open";
    case SlotState::Closed1: return "closed1";
    case SlotState::Closed2: return "closed2";
    }
    return "?";
}

void validate(const Scenario& sc)
{
    // Re-derive to catch hand-built configs that skipped derive_slot_params.
    const SlotConfig check = derive_slot_params(sc.cfg.K, sc.cfg.alpha, sc.cfg.T);
    if (std::abs(check.Ts - sc.cfg.Ts) > 1e-12 || std::abs(check.gamma - sc.cfg.gamma) > 1e-12)
        throw ConfigError("slot config has inconsistent Ts / gamma");
    validate(sc.policy);
    traffic::validate(sc.traffic);
    if (sc.horizon < 0)
        throw ConfigError("horizon must be >= 0");
    if (sc.warmup < 0 || (sc.horizon > 0 && sc.warmup >= sc.horizon))
        throw ConfigError("warmup must satisfy 0 <= warmup < horizon");
    if (!(sc.q >= 0.0 && sc.q <= 1.0))
        throw ConfigError("q must lie in [0, 1]");
    if (sc.sample_every < 1)
        throw ConfigError("sample_every must be >= 1");
}

SimState make_sim_state(const SlotConfig& cfg, double q, std::uint64_t seed)
{
    SimState st;
    st.cfg = cfg;
    st.q = q;
    st.rng.seed(detail::mix_seed(seed));
    return st;
}

ChannelOutcome apply_misdetection(const ChannelOutcome& outcome, double q, std::mt19937_64& rng)
{
    const auto* c1 = std::get_if<Type1Collision>(&outcome);
    if (c1 == nullptr || q <= 0.0)
        return outcome;
    if (q >= 1.0 || std::bernoulli_distribution(q)(rng))
        return Type2Collision{c1->first_to, c1->total};
    return outcome;
}

OpenSlotResult step_open_slot(SimState& state, std::vector<Transmission> transmissions)
{
    if (state.slot_state != SlotState::Open)
        throw InvariantError("transmission attempted in a closed slot");

    std::vector<int> tos;
    tos.reserve(transmissions.size());
    for (const auto& tx : transmissions)
        tos.push_back(tx.to);

    OpenSlotResult out;
    out.true_outcome = classify_slot(tos, state.cfg.K);
    out.announced = apply_misdetection(out.true_outcome, state.q, state.rng);
    out.feedback = make_feedback(out.announced);

    std::visit(overloaded{
                   [](const Idle&) {},
                   [&](const Success&) { out.delivered.push_back(std::move(transmissions.front().user)); },
                   [&](const Type2Collision&) {
                       for (auto& tx : transmissions)
                           out.returned.push_back(std::move(tx.user));
                   },
                   [&](const Type1Collision& c) {
                       state.first_set.clear();
                       state.last_set.clear();
                       for (auto& tx : transmissions) {
                           if (tx.to == c.first_to) {
                               tx.user.role_tag = RoleTag::FirstRetransmitter;
                               state.first_set.push_back(std::move(tx.user));
                           } else if (tx.to == c.last_to) {
                               tx.user.role_tag = RoleTag::LastRetransmitter;
                               state.last_set.push_back(std::move(tx.user));
                           } else {
                               out.returned.push_back(std::move(tx.user));
                           }
                       }
                       state.slot_state = SlotState::Closed1;
                   },
               },
               out.announced);
    ++state.slot;
    return out;
}

ClosedSlotResult step_closed_slot(SimState& state)
{
    std::vector<UserState>* group = nullptr;
    if (state.slot_state == SlotState::Closed1) {
        group = &state.first_set;
        state.slot_state = SlotState::Closed2;
    } else if (state.slot_state == SlotState::Closed2) {
        group = &state.last_set;
        state.slot_state = SlotState::Open;
    } else {
        throw InvariantError("step_closed_slot called in an open slot");
    }
    if (group->empty())
        throw InvariantError("closed slot without designated retransmitters");

    ClosedSlotResult out;
    out.success = group->size() == 1;
    for (auto& u : *group) {
        u.role_tag = RoleTag::None;
        (out.success ? out.delivered : out.returned).push_back(std::move(u));
    }
    group->clear();
    ++state.slot;
    return out;
}

ResolutionOutcome resolve_type1(std::size_t first_count, std::size_t last_count)
{
    if (first_count == 0 || last_count == 0)
        throw InvariantError("type-1 resolution needs non-empty first and last groups");
    const bool first_ok = first_count == 1;
    const bool last_ok = last_count == 1;
    if (first_ok && last_ok)
        return ResolutionOutcome::Type0Success;
    if (first_ok)
        return ResolutionOutcome::Type1Success;
    if (last_ok)
        return ResolutionOutcome::Type2Success;
    return ResolutionOutcome::ThreeSlotCollision;
}

namespace {

struct Sleeper {
    std::int64_t wake = 0;
    UserState user;
};

struct WakesLater {
    bool operator()(const Sleeper& a, const Sleeper& b) const
    {
        if (a.wake != b.wake)
            return a.wake > b.wake;
        return a.user.id > b.user.id;
    }
};

class Run {
public:
    Run(const Scenario& sc, std::ostream* trace)
        : sc_(sc), state_(make_sim_state(sc.cfg, sc.q, sc.seed)), arrivals_(sc.traffic, sc.cfg),
          trace_(trace)
    {
        window_ = std::holds_alternative<BayesWindow>(sc.policy);
        std::visit(overloaded{
                       [](const FixedP&) {},
                       [this](const BayesP& b) { init_estimator(b.theta, b.kappa, b.increment); },
                       [this](const BayesWindow& b) { init_estimator(b.theta, b.kappa, b.increment); },
                       [](const Genie&) {},
                   },
                   sc.policy);

        for (std::int64_t i = 0; i < arrivals_.saturated_users(); ++i)
            add_packet(0.0);
        if (trace_ != nullptr)
            *trace_ << "slot,state,outcome,backlog\n";
    }

    MetricsRecord run()
    {
        std::int64_t t = 0;
        while (t < sc_.horizon)
            t += open_cycle(t);
        finish();
        return std::move(m_);
    }

private:
    void init_estimator(double theta, double kappa, CollisionIncrement inc)
    {
        if (kappa <= 0.0)
            kappa = analysis::optimal_kappa(sc_.cfg.K).kappa;
        state_.estimator = make_estimator(theta, kappa, inc);
    }

    std::int64_t in_system() const { return generated_ - delivered_; }
    bool measured(std::int64_t d) const { return d >= sc_.warmup; }

    void add_packet(double arrival_time)
    {
        UserState u;
        u.id = state_.next_id++;
        u.arrival_time = arrival_time;
        u.monitoring = true;
        state_.pending.push_back(u);
        ++generated_;
    }

    // Bookkeeping at the start of slot d.
    void begin_slot(std::int64_t d)
    {
        const auto n = in_system();
        if (measured(d)) {
            ++m_.measured_slots;
            area_ += static_cast<double>(n) * sc_.cfg.Ts;
        }
        if (d % sc_.sample_every == 0) {
            const double est = state_.estimator ? state_.estimator->nu
                                                : std::numeric_limits<double>::quiet_NaN();
            m_.backlog_trajectory.push_back({d, n, est});
        }
        if (!m_.service_completion_slot && n == 0 && arrivals_.finished_by(d) && !arrivals_.saturated() &&
            std::holds_alternative<traffic::BetaActivation>(sc_.traffic))
            m_.service_completion_slot = d;
    }

    // Arrivals generated during slot d wait in `pending`.
    void end_slot(std::int64_t d, const std::vector<UserState>& delivered, double monitoring,
                  const char* state_name, const char* outcome)
    {
        const double slot_end = static_cast<double>(d + 1) * sc_.cfg.Ts;
        for (const auto& u : delivered) {
            ++delivered_;
            if (measured(d)) {
                ++m_.successes;
                if (arrivals_.saturated())
                    continue;
                m_.sum_delay += (slot_end - u.arrival_time) / sc_.cfg.T;
                ++m_.delay_count;
            }
        }
        if (arrivals_.saturated()) {
            for (std::size_t i = 0; i < delivered.size(); ++i)
                add_packet(slot_end);
        }

        arrival_buf_.clear();
        arrivals_.arrivals_in_slot(d, state_.rng, arrival_buf_);
        for (double a : arrival_buf_) {
            add_packet(a);
            if (measured(d)) {
                ++m_.arrivals;
                area_ += slot_end - a;
            }
        }
        if (measured(d))
            m_.monitoring_sum += monitoring;
        if (trace_ != nullptr)
            *trace_ << d << ',' << state_name << ',' << outcome << ',' << in_system() << '\n';
    }

    void give_back(std::vector<UserState>& users)
    {
        for (auto& u : users) {
            u.role_tag = RoleTag::None;
            u.monitoring = true;
            if (window_)
                waiting_.push_back(std::move(u));
            else
                state_.backlog.push_back(std::move(u));
        }
        users.clear();
    }

    double bernoulli_probability(std::size_t contenders)
    {
        return std::visit(overloaded{
                              [](const FixedP& f) { return f.p; },
                              [this](const BayesP&) { return state_.estimator->p_star; },
                              [this](const BayesWindow&) { return state_.estimator->p_star; },
                              [&, this](const Genie&) {
                                  if (contenders == 0)
                                      return 1.0;
                                  return analysis::optimal_p_for_n(static_cast<std::int64_t>(contenders),
                                                                   sc_.cfg);
                              },
                          },
                          sc_.policy);
    }

    std::vector<Transmission> select_bernoulli(double& monitoring)
    {
        auto& pool = state_.backlog;
        for (auto& u : state_.pending)
            pool.push_back(std::move(u));
        state_.pending.clear();

        const auto n = pool.size();
        monitoring = static_cast<double>(n);
        std::vector<Transmission> tx;
        if (n == 0)
            return tx;

        // Binomial count plus a uniform subset is equivalent to n independent
        // Bernoulli trials and costs O(k) instead of O(n).
        const double p = bernoulli_probability(n);
        const auto k = static_cast<std::size_t>(
            std::binomial_distribution<std::int64_t>(static_cast<std::int64_t>(n), p)(state_.rng));
        std::uniform_int_distribution<int> to_dist(1, sc_.cfg.K);
        tx.reserve(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto last = n - 1 - i;
            const auto j = std::uniform_int_distribution<std::size_t>(0, last)(state_.rng);
            std::swap(pool[j], pool[last]);
        }
        for (std::size_t i = 0; i < k; ++i) {
            auto u = std::move(pool.back());
            pool.pop_back();
            tx.push_back({std::move(u), to_dist(state_.rng)});
        }
        return tx;
    }

    BroadcastView view(bool open) const
    {
        BroadcastView v;
        v.slot_open = open;
        v.K = sc_.cfg.K;
        v.p = state_.estimator ? state_.estimator->p_star : 1.0;
        v.U = window_size(v.p);
        return v;
    }

    std::vector<Transmission> select_window(std::int64_t t, double& monitoring)
    {
        for (auto& u : state_.pending)
            waiting_.push_back(std::move(u));
        state_.pending.clear();

        std::vector<Transmission> tx;
        const BroadcastView v = view(true);
        monitoring = static_cast<double>(waiting_.size());
        for (auto& u : waiting_) {
            const Decision d = user_decision(sc_.policy, u, v, state_.rng);
            if (const auto* go = std::get_if<Transmit>(&d)) {
                tx.push_back({std::move(u), go->to});
            } else {
                // Counter c drawn now: transmits in slot t + c.
                sleepers_.push_back({t + 1 + u.backoff_counter, std::move(u)});
                std::push_heap(sleepers_.begin(), sleepers_.end(), WakesLater{});
            }
        }
        waiting_.clear();

        std::uniform_int_distribution<int> to_dist(1, sc_.cfg.K);
        while (!sleepers_.empty() && sleepers_.front().wake <= t) {
            std::pop_heap(sleepers_.begin(), sleepers_.end(), WakesLater{});
            auto s = std::move(sleepers_.back());
            sleepers_.pop_back();
            s.user.backoff_counter = 0;
            tx.push_back({std::move(s.user), to_dist(state_.rng)});
            monitoring += 1.0;
        }
        return tx;
    }

    // Users whose counter expires in closed slot d wait for the next broadcast.
    double expire_in_closed_slot(std::int64_t d)
    {
        double expired = 0.0;
        while (!sleepers_.empty() && sleepers_.front().wake <= d) {
            std::pop_heap(sleepers_.begin(), sleepers_.end(), WakesLater{});
            auto s = std::move(sleepers_.back());
            sleepers_.pop_back();
            s.user.backoff_counter = 0;
            s.user.monitoring = true;
            waiting_.push_back(std::move(s.user));
            expired += 1.0;
        }
        return expired;
    }

    std::int64_t open_cycle(std::int64_t t)
    {
        begin_slot(t);
        double monitoring = 0.0;
        auto tx = window_ ? select_window(t, monitoring) : select_bernoulli(monitoring);

        OpenSlotResult res = step_open_slot(state_, std::move(tx));
        const OutcomeCode code = outcome_code(res.announced);
        if (measured(t)) {
            ++m_.open_outcomes[static_cast<std::size_t>(code)];
            if (std::holds_alternative<Type1Collision>(res.true_outcome))
                ++m_.true_type1;
        }
        end_slot(t, res.delivered, monitoring, "open", to_string(code));
        give_back(res.returned);

        int s = 0;
        std::int64_t L = 1;
        if (state_.slot_state == SlotState::Closed1) {
            const auto first_count = state_.first_set.size();
            const auto last_count = state_.last_set.size();
            for (std::int64_t d = t + 1; d <= t + 2; ++d) {
                begin_slot(d);
                const char* name = to_string(state_.slot_state);
                ClosedSlotResult cr = step_closed_slot(state_);
                double watchers = static_cast<double>(cr.delivered.size() + cr.returned.size());
                if (window_)
                    watchers += expire_in_closed_slot(d);
                end_slot(d, cr.delivered, watchers, name, cr.success ? "success" : "collision");
                give_back(cr.returned);
                s += cr.success ? 1 : 0;
            }
            if (measured(t))
                ++m_.resolutions[static_cast<std::size_t>(resolve_type1(first_count, last_count))];
            L = 3;
        }

        if (state_.estimator)
            state_.estimator = estimator_update(*state_.estimator, code, s);
        m_.slots_elapsed = t + L;
        return L;
    }

    void finish()
    {
        const double measured_time = static_cast<double>(m_.measured_slots) * sc_.cfg.Ts;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        m_.throughput = measured_time > 0.0 ? static_cast<double>(m_.successes) * sc_.cfg.T / measured_time
                                            : 0.0;
        m_.avg_delay = m_.delay_count > 0 ? m_.sum_delay / static_cast<double>(m_.delay_count) : nan;
        m_.avg_backlog = measured_time > 0.0 ? area_ / measured_time : nan;
        m_.mean_monitoring =
            m_.measured_slots > 0 ? m_.monitoring_sum / static_cast<double>(m_.measured_slots) : nan;
        m_.generated_total = generated_;
        m_.delivered_total = delivered_;
        m_.in_system_final = static_cast<std::int64_t>(state_.backlog.size() + state_.pending.size() +
                                                       waiting_.size() + sleepers_.size() +
                                                       state_.first_set.size() + state_.last_set.size());
        if (m_.in_system_final != generated_ - delivered_)
            throw InvariantError("packet conservation violated");
    }

    const Scenario& sc_;
    SimState state_;
    traffic::ArrivalProcess arrivals_;
    std::ostream* trace_;
    MetricsRecord m_;
    bool window_ = false;
    std::vector<UserState> waiting_; // window policy: awaiting a fresh counter
    std::vector<Sleeper> sleepers_;  // window policy: min-heap on wake slot
    std::vector<double> arrival_buf_;
    std::int64_t generated_ = 0;
    std::int64_t delivered_ = 0;
    double area_ = 0.0;
};

} // namespace

MetricsRecord simulate(const Scenario& scenario, std::ostream* trace)
{
    validate(scenario);
    if (scenario.horizon == 0)
        return {};
    return Run(scenario, trace).run();
}

double mean_backlog(const MetricsRecord& m, std::int64_t from, std::int64_t to)
{
    double sum = 0.0;
    std::int64_t count = 0;
    for (const auto& s : m.backlog_trajectory) {
        if (s.slot >= from && s.slot < to) {
            sum += static_cast<double>(s.backlog);
            ++count;
        }
    }
    return count > 0 ? sum / static_cast<double>(count) : std::numeric_limits<double>::quiet_NaN();
}

std::int64_t backlog_at(const MetricsRecord& m, std::int64_t at)
{
    for (const auto& s : m.backlog_trajectory)
        if (s.slot >= at)
            return s.backlog;
    return m.backlog_trajectory.empty() ? 0 : m.backlog_trajectory.back().backlog;
}

} // namespace toaloha
