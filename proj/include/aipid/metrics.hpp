#pragma once

// Time-domain criteria over a recorded trajectory. Integrals use the
// rectangle rule at the recording stride; e(t) = reference − y(t).

#include <aipid/errors.hpp>
#include <aipid/simloop.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace aipid {

struct Metrics {
    double iae = 0.0;               ///< ∫|e| dt
    double ie = 0.0;                ///< ∫e dt
    double overshoot_pct = 0.0;
    double rise_time_10_90 = 0.0;   ///< s; +inf if 90% is never reached
    double settling_time_2pct = 0.0;///< s from window start; +inf if not settled
    double steady_state_error = 0.0;///< mean e over the final 5% of the window
    double peak_u = 0.0;

    friend bool operator==(const Metrics &, const Metrics &) = default;
};

struct MetricWindow {
    double t_start = 0.0;
    double t_end = std::numeric_limits<double>::infinity();
};

/// Rows with t_start ≤ t < t_end contribute. Rise time and overshoot are
/// measured against the step from the first in-window output to `reference`.
/// The settling band is 2% of that step, or 0.02 absolute when there is no
/// step (pure disturbance rejection).
inline Metrics compute_metrics(const Trajectory &traj, MetricWindow window, double reference) {
    const double eps_t = 1e-9 * std::max(1.0, traj.dt_record);
    auto first = std::find_if(traj.rows.begin(), traj.rows.end(),
                              [&](const TraceRow &r) { return r.t >= window.t_start - eps_t; });
    auto last = std::find_if(first, traj.rows.end(), [&](const TraceRow &r) { return r.t >= window.t_end - eps_t; });
    if (first == last) {
        throw EmptyWindow("no trajectory rows in metric window");
    }
    const double h = traj.dt_record;
    const double y0 = first->y;
    const double step = reference - y0;
    const bool has_step = std::abs(step) > 1e-12;
    const double band = has_step ? 0.02 * std::abs(step) : 0.02;

    Metrics m;
    double t10 = std::numeric_limits<double>::quiet_NaN();
    double t90 = std::numeric_limits<double>::quiet_NaN();
    double peak_excess = 0.0;
    const TraceRow *last_outside = nullptr;
    for (auto it = first; it != last; ++it) {
        const double e = reference - it->y;
        m.iae += std::abs(e) * h;
        m.ie += e * h;
        m.peak_u = std::max(m.peak_u, std::abs(it->u));
        if (has_step) {
            const double progress = (it->y - y0) / step;
            if (std::isnan(t10) && progress >= 0.1) {
                t10 = it->t;
            }
            if (std::isnan(t90) && progress >= 0.9) {
                t90 = it->t;
            }
            peak_excess = std::max(peak_excess, progress - 1.0);
        }
        if (std::abs(e) > band) {
            last_outside = &*it;
        }
    }
    const auto count = static_cast<std::size_t>(std::distance(first, last));

    m.overshoot_pct = 100.0 * peak_excess;
    if (has_step) {
        m.rise_time_10_90 = std::isnan(t90) ? std::numeric_limits<double>::infinity() : t90 - t10;
    }
    const TraceRow &final_row = *(last - 1);
    if (last_outside == nullptr) {
        m.settling_time_2pct = 0.0;
    } else if (last_outside == &final_row) {
        m.settling_time_2pct = std::numeric_limits<double>::infinity();
    } else {
        m.settling_time_2pct = last_outside->t + h - first->t;
    }

    const std::size_t tail = std::max<std::size_t>(1, count / 20);
    double acc = 0.0;
    for (auto it = last - static_cast<std::ptrdiff_t>(tail); it != last; ++it) {
        acc += reference - it->y;
    }
    m.steady_state_error = acc / static_cast<double>(tail);
    return m;
}

/// Window and reference a scenario's metrics are reported against: from the
/// last set-point change (or the configured start) to the end of the run.
inline std::pair<MetricWindow, double> default_metric_window(const ScenarioConfig &cfg) {
    double start = 0.0;
    for (const SetpointChange &sp : cfg.setpoints) {
        if (sp.time <= cfg.sim.duration) {
            start = std::max(start, sp.time);
        }
    }
    MetricWindow w;
    w.t_start = cfg.sim.metrics_start.value_or(start);
    w.t_end = cfg.sim.metrics_end.value_or(cfg.sim.duration);
    return {w, setpoint_at(cfg.setpoints, w.t_start)};
}

inline Metrics scenario_metrics(const ScenarioConfig &cfg, const Trajectory &traj) {
    const auto [window, reference] = default_metric_window(cfg);
    return compute_metrics(traj, window, reference);
}

} // namespace aipid
