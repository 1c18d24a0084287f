#include "toaloha/fcfs.hpp"

#include <algorithm>
#include <deque>
#include <limits>

#include "toaloha/detail/seed.hpp"

namespace toaloha {

Interval fcfs_allocate(const FcfsState& state, double now)
{
    return {state.commit_time, std::max(0.0, std::min(state.window, now - state.commit_time))};
}

FcfsState fcfs_update(const FcfsState& state, FcfsFeedback outcome)
{
    FcfsState next = state;
    const Interval cur = state.current;
    const auto end_crp = [&] {
        next.commit_time = cur.end();
        next.crp_active = false;
        next.on_left = false;
        next.pending_right.reset();
    };

    switch (outcome) {
    case FcfsFeedback::Collision:
        next.crp_active = true;
        next.on_left = true;
        next.current = {cur.start, cur.length / 2.0};
        next.pending_right = Interval{cur.start + cur.length / 2.0, cur.length / 2.0};
        break;
    case FcfsFeedback::Idle:
        if (state.crp_active && state.on_left && state.pending_right) {
            // The right sibling must hold the collision: split it now.
            const Interval r = *state.pending_right;
            next.commit_time = cur.end();
            next.current = {r.start, r.length / 2.0};
            next.pending_right = Interval{r.start + r.length / 2.0, r.length / 2.0};
            next.on_left = true;
        } else {
            end_crp();
        }
        break;
    case FcfsFeedback::Success:
        if (state.crp_active && state.on_left && state.pending_right) {
            next.commit_time = cur.end();
            next.current = *state.pending_right;
            next.pending_right.reset();
            next.on_left = false;
        } else {
            end_crp();
        }
        break;
    }
    return next;
}

MetricsRecord simulate_fcfs(const Scenario& scenario)
{
    Scenario sc = scenario;
    sc.cfg = derive_slot_params(1, 0.0, scenario.cfg.T);
    validate(sc);
    if (std::holds_alternative<traffic::Saturated>(sc.traffic))
        throw ConfigError("FCFS needs arrival timestamps; saturated traffic is not supported");

    MetricsRecord m;
    if (sc.horizon == 0)
        return m;

    std::mt19937_64 rng(detail::mix_seed(sc.seed));
    traffic::ArrivalProcess arrivals(sc.traffic, sc.cfg);
    const bool beta = std::holds_alternative<traffic::BetaActivation>(sc.traffic);

    std::deque<double> queue; // undelivered arrival times in slot units, ascending
    std::vector<double> buf;
    FcfsState st;
    double area = 0.0;
    std::int64_t generated = 0;
    std::int64_t delivered = 0;
    double last_delivered = -std::numeric_limits<double>::infinity();

    for (std::int64_t t = 0; t < sc.horizon; ++t) {
        const bool measured = t >= sc.warmup;
        const auto n = generated - delivered;
        const double now = static_cast<double>(t);

        if (!st.crp_active)
            st.current = fcfs_allocate(st, now);

        if (measured) {
            ++m.measured_slots;
            area += static_cast<double>(n);
            m.monitoring_sum += static_cast<double>(n);
        }
        if (t % sc.sample_every == 0)
            m.backlog_trajectory.push_back({t, n, now - st.commit_time});
        if (beta && !m.service_completion_slot && n == 0 && arrivals.finished_by(t))
            m.service_completion_slot = t;

        const auto lo = std::lower_bound(queue.begin(), queue.end(), st.current.start);
        const auto hi = std::lower_bound(lo, queue.end(), st.current.end());
        const auto k = std::distance(lo, hi);

        FcfsFeedback fb = FcfsFeedback::Idle;
        if (k == 1) {
            fb = FcfsFeedback::Success;
            const double a = *lo;
            if (a < last_delivered)
                throw InvariantError("FCFS delivered out of arrival order");
            last_delivered = a;
            queue.erase(lo);
            ++delivered;
            if (measured) {
                ++m.successes;
                m.sum_delay += now + 1.0 - a;
                ++m.delay_count;
            }
        } else if (k > 1) {
            fb = FcfsFeedback::Collision;
        }
        if (measured)
            ++m.open_outcomes[static_cast<std::size_t>(fb == FcfsFeedback::Idle      ? OutcomeCode::Idle
                                                       : fb == FcfsFeedback::Success ? OutcomeCode::Success
                                                                                     : OutcomeCode::Type2)];
        if (st.crp_active || k > 0)
            st = fcfs_update(st, fb);
        else
            st.commit_time = st.current.end(); // empty allocation: nothing to resolve

        buf.clear();
        arrivals.arrivals_in_slot(t, rng, buf);
        for (double a : buf) {
            queue.push_back(a / sc.cfg.Ts);
            ++generated;
            if (measured) {
                ++m.arrivals;
                area += now + 1.0 - a / sc.cfg.Ts;
            }
        }
        m.slots_elapsed = t + 1;
    }

    const double slots = static_cast<double>(m.measured_slots);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    m.throughput = slots > 0 ? static_cast<double>(m.successes) / slots : 0.0;
    m.avg_delay = m.delay_count > 0 ? m.sum_delay / static_cast<double>(m.delay_count) : nan;
    m.avg_backlog = slots > 0 ? area / slots : nan;
    m.mean_monitoring = slots > 0 ? m.monitoring_sum / slots : nan;
    m.generated_total = generated;
    m.delivered_total = delivered;
    m.in_system_final = static_cast<std::int64_t>(queue.size());
    if (m.in_system_final != generated - delivered)
        throw InvariantError("packet conservation violated");
    return m;
}

} // namespace toaloha
