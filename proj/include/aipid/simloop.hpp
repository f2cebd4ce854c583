#pragma once

// Fixed-step closed-loop engine: plant, sensor, disturbance and the
// active-inference controller share one dt. Runs are deterministic given the
// scenario (including its seeds).

#include <aipid/controller.hpp>
#include <aipid/errors.hpp>
#include <aipid/gencoords.hpp>
#include <aipid/genmodel.hpp>
#include <aipid/noise.hpp>
#include <aipid/plant.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace aipid {

struct SetpointChange {
    double time = 0.0;
    double value = 0.0;

    friend bool operator==(const SetpointChange &, const SetpointChange &) = default;
};

/// Controller section of a scenario: structure, rates and initial precisions.
struct ControllerSetup {
    std::size_t depth = kDefaultDepth;
    double alpha = 1.0;
    double obs_gain = 1.0;
    ControllerConfig config;
    OrderVector pi_z{1.0, 1.0, 0.0};
    OrderVector pi_w{1.0, 1.0};
    OrderVector hyper_weight_z{0.0, 0.0, 0.0};
    OrderVector hyper_weight_w{0.0, 0.0};
    OrderVector hyper_target_z{1.0, 1.0, 1.0};
    OrderVector hyper_target_w{1.0, 1.0};
    double initial_action = 0.0;
    double n_filt = 10.0;  ///< derivative filter of the PID reference

    PrecisionState initial_precisions() const {
        PrecisionState pr = PrecisionState::from_precisions(pi_z, pi_w);
        pr.hyper_weight_z = hyper_weight_z;
        pr.hyper_weight_w = hyper_weight_w;
        pr.hyper_target_z = hyper_target_z;
        pr.hyper_target_w = hyper_target_w;
        return pr;
    }

    GenerativeModel model(double setpoint) const {
        GenerativeModel m;
        m.alpha = alpha;
        m.obs_gain = obs_gain;
        m.setpoint = GeneralisedSignal::constant(setpoint, depth);
        return m;
    }

    friend bool operator==(const ControllerSetup &, const ControllerSetup &) = default;
};

struct SimSettings {
    double duration = 60.0;
    double dt = 1e-3;
    std::uint64_t seed = 0;
    std::size_t record_stride = 1;
    /// Metric window; unset means [last set-point change, duration].
    std::optional<double> metrics_start;
    std::optional<double> metrics_end;

    friend bool operator==(const SimSettings &, const SimSettings &) = default;
};

struct ScenarioConfig {
    PlantSpec plant;
    SensorSpec sensor;
    DisturbanceSpec disturbance;
    std::vector<SetpointChange> setpoints{{0.0, 0.0}};
    ControllerSetup controller;
    SimSettings sim;

    friend bool operator==(const ScenarioConfig &, const ScenarioConfig &) = default;
};

inline void validate(const ControllerSetup &c, const std::string &where = "controller") {
    if (c.depth < 1 || c.depth > kMaxDepth) {
        throw ValidationError(where + ".p", "must be in 1.." + std::to_string(kMaxDepth));
    }
    if (!(c.alpha > 0.0) || !std::isfinite(c.alpha)) {
        throw ValidationError(where + ".alpha", "must be finite and > 0");
    }
    if (!std::isfinite(c.obs_gain)) {
        throw ValidationError(where + ".obs_gain", "must be finite");
    }
    auto sized = [&](const OrderVector &v, std::size_t n, const char *name) {
        if (v.size() != n) {
            throw ValidationError(where + "." + name, "must have " + std::to_string(n) + " entries");
        }
        if (!v.all_finite()) {
            throw ValidationError(where + "." + name, "entries must be finite");
        }
    };
    sized(c.pi_z, c.depth, "pi_z");
    sized(c.pi_w, c.depth - 1, "pi_w");
    sized(c.hyper_weight_z, c.depth, "hyper_weight_z");
    sized(c.hyper_weight_w, c.depth - 1, "hyper_weight_w");
    sized(c.hyper_target_z, c.depth, "hyper_target_z");
    sized(c.hyper_target_w, c.depth - 1, "hyper_target_w");
    auto all = [](const OrderVector &v, auto pred) {
        for (double x : v) {
            if (!pred(x)) {
                return false;
            }
        }
        return true;
    };
    if (!all(c.pi_z, [](double x) { return x >= 0.0; })) {
        throw ValidationError(where + ".pi_z", "precisions must be >= 0");
    }
    if (!all(c.pi_w, [](double x) { return x >= 0.0; })) {
        throw ValidationError(where + ".pi_w", "precisions must be >= 0");
    }
    if (!all(c.hyper_weight_z, [](double x) { return x >= 0.0; })) {
        throw ValidationError(where + ".hyper_weight_z", "must be >= 0");
    }
    if (!all(c.hyper_weight_w, [](double x) { return x >= 0.0; })) {
        throw ValidationError(where + ".hyper_weight_w", "must be >= 0");
    }
    if (!all(c.hyper_target_z, [](double x) { return x > 0.0; })) {
        throw ValidationError(where + ".hyper_target_z", "must be > 0");
    }
    if (!all(c.hyper_target_w, [](double x) { return x > 0.0; })) {
        throw ValidationError(where + ".hyper_target_w", "must be > 0");
    }
    if (!std::isfinite(c.initial_action)) {
        throw ValidationError(where + ".initial_action", "must be finite");
    }
    if (c.config.u_max && std::abs(c.initial_action) > *c.config.u_max) {
        throw ValidationError(where + ".initial_action", "must lie within u_max");
    }
    if (!std::isfinite(c.n_filt)) {
        throw ValidationError(where + ".n_filt", "must be finite");
    }
    validate(c.config, c.depth, where);
}

inline void validate(const ScenarioConfig &cfg) {
    validate(cfg.plant);
    validate(cfg.sensor);
    validate(cfg.disturbance);
    validate(cfg.controller);
    const SimSettings &s = cfg.sim;
    if (!(s.duration > 0.0) || !std::isfinite(s.duration)) {
        throw ValidationError("sim.duration", "must be finite and > 0");
    }
    if (!(s.dt > 0.0) || !(s.dt <= s.duration)) {
        throw ValidationError("sim.dt", "must satisfy 0 < dt <= duration");
    }
    if (s.record_stride < 1) {
        throw ValidationError("sim.record_stride", "must be >= 1");
    }
    if (cfg.setpoints.empty()) {
        throw ValidationError("setpoints", "must contain at least one entry");
    }
    for (std::size_t i = 0; i < cfg.setpoints.size(); ++i) {
        const SetpointChange &sp = cfg.setpoints[i];
        if (!std::isfinite(sp.time) || !std::isfinite(sp.value)) {
            throw ValidationError("setpoints." + std::to_string(i), "time and value must be finite");
        }
        if (i > 0 && sp.time < cfg.setpoints[i - 1].time) {
            throw ValidationError("setpoints." + std::to_string(i) + ".time", "times must be non-decreasing");
        }
    }
    if (s.metrics_start && s.metrics_end && !(*s.metrics_end > *s.metrics_start)) {
        throw ValidationError("sim.metrics_end", "must be > metrics_start");
    }
}

/// Value of the latest change at or before t; the first entry's value before it.
inline double setpoint_at(const std::vector<SetpointChange> &schedule, double t) {
    double v = schedule.empty() ? 0.0 : schedule.front().value;
    for (const SetpointChange &sp : schedule) {
        if (sp.time <= t) {
            v = sp.value;
        } else {
            break;
        }
    }
    return v;
}

/// Number of controller ticks after t = 0.
inline std::size_t tick_count(const SimSettings &s) {
    return static_cast<std::size_t>(std::floor(s.duration / s.dt + 1e-9));
}

struct TraceRow {
    double t = 0.0;
    double y = 0.0;
    double x_plant = 0.0;
    double u = 0.0;
    double v = 0.0;
    double d = 0.0;
    OrderVector mu_x;
    OrderVector eps_z;
    OrderVector eps_w;
    OrderVector pi_z;
    OrderVector pi_w;
    FreeEnergyBreakdown F;
};

struct Trajectory {
    std::size_t depth = kDefaultDepth;
    double dt_record = 0.0;  ///< spacing between rows, s
    std::vector<TraceRow> rows;
};

/// Everything the loop knows at the end of a tick, for callers that need
/// per-tick data beyond the recorded rows.
struct TickInfo {
    std::size_t tick = 0;
    double t = 0.0;
    double y = 0.0;
    double v = 0.0;
    double d = 0.0;
    const GeneralisedSignal &y_embedded;
    const ControllerState &state;
};

using TickObserver = std::function<void(const TickInfo &)>;

/// Per tick: measure, embed the last p samples, recognition/action update,
/// precision update (if learning), record, then advance the plant under the
/// new action. Before p samples exist the window is padded with the first.
inline Trajectory run_closed_loop(const ScenarioConfig &cfg, const TickObserver &observer = {}) {
    validate(cfg);
    const ControllerSetup &cs = cfg.controller;
    const std::size_t p = cs.depth;
    const double dt = cfg.sim.dt;
    const std::size_t n_ticks = tick_count(cfg.sim);
    const std::size_t stride = cfg.sim.record_stride;

    UnitNoiseStream sensor_noise =
        make_sensor_stream(cfg.sensor, combine_seeds(cfg.sim.seed, cfg.sensor.meas_noise.seed), dt);
    UnitNoiseStream process_noise(cfg.plant.process_noise.kind, cfg.plant.process_noise.gamma,
                                  combine_seeds(cfg.sim.seed ^ 0x5bd1e995ULL, cfg.plant.process_noise.seed), dt);
    const double w_scale = cfg.plant.process_noise.kind == NoiseKind::white
                               ? cfg.plant.process_noise.sigma / std::sqrt(dt)
                               : cfg.plant.process_noise.sigma;

    GenerativeModel model = cs.model(setpoint_at(cfg.setpoints, 0.0));
    ControllerState state = ControllerState::initial(model, cs.initial_precisions(), cs.initial_action);
    PlantState plant = initial_state(cfg.plant);

    Trajectory traj;
    traj.depth = p;
    traj.dt_record = dt * static_cast<double>(stride);
    traj.rows.reserve(n_ticks / stride + 1);

    std::vector<double> window;
    window.reserve(p);

    for (std::size_t n = 0; n <= n_ticks; ++n) {
        const double t = static_cast<double>(n) * dt;
        const double v = setpoint_at(cfg.setpoints, t);
        const double d = disturbance_at(cfg.disturbance, t);
        const double y = measure(plant.x, cfg.plant.c_p, cfg.sensor, t, sensor_noise);

        if (window.empty()) {
            window.assign(p, y);
        } else {
            std::rotate(window.begin(), window.begin() + 1, window.end());
            window.back() = y;
        }
        const GeneralisedSignal y_emb = embed(window, dt, p);
        model.setpoint = GeneralisedSignal::constant(v, p);

        state = step_fast(state, cs.config, model, y_emb, dt);
        if (cs.config.learn_precisions) {
            state = step_slow(state, cs.config, model, dt);
        }
        if (observer) {
            observer(TickInfo{n, t, y, v, d, y_emb, state});
        }

        if (n % stride == 0) {
            const PredictionErrors eps = prediction_errors(model, y_emb, state.mu_x);
            TraceRow row;
            row.t = t;
            row.y = y;
            row.x_plant = plant.x;
            row.u = state.action;
            row.v = v;
            row.d = d;
            row.mu_x = state.mu_x.orders;
            row.eps_z = eps.z;
            row.eps_w = eps.w;
            row.pi_z = state.pr.pi_z_all();
            row.pi_w = state.pr.pi_w_all();
            row.F = free_energy(model, y_emb, state.mu_x, state.pr, false);
            traj.rows.push_back(std::move(row));
        }

        if (n < n_ticks) {
            const double w = w_scale == 0.0 ? 0.0 : w_scale * process_noise.next();
            plant = plant_step(plant, cfg.plant, state.action, d, w, dt, t);
        }
    }
    return traj;
}

} // namespace aipid
