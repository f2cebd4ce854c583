#pragma once

// Active-inference controller: fast recognition and action dynamics on the
// free energy, plus slow learning of the expected precisions.

#include <aipid/errors.hpp>
#include <aipid/gencoords.hpp>
#include <aipid/genmodel.hpp>

#include <algorithm>
#include <cmath>
#include <optional>

namespace aipid {

struct ControllerConfig {
    double kappa_x = 10.0;     ///< recognition rate, s⁻¹
    double kappa_a = 1.0;      ///< action rate, s⁻¹
    double kappa_pi = 0.01;    ///< precision learning rate, s⁻¹
    double tau_ema = 5.0;      ///< squared-error smoothing time constant, s
    OrderVector dy_da{1.0, 1.0, 1.0};
    bool clamp_expectations = false;
    std::optional<double> u_max;
    bool learn_precisions = false;

    friend bool operator==(const ControllerConfig &, const ControllerConfig &) = default;
};

/// Throws ValidationError naming the offending field under `where`.
inline void validate(const ControllerConfig &cfg, std::size_t depth, const std::string &where = "controller") {
    if (!(cfg.kappa_x > 0.0) || !std::isfinite(cfg.kappa_x)) {
        throw ValidationError(where + ".kappa_x", "must be finite and > 0");
    }
    if (!(cfg.kappa_a > 0.0) || !std::isfinite(cfg.kappa_a)) {
        throw ValidationError(where + ".kappa_a", "must be finite and > 0");
    }
    if (!(cfg.kappa_pi >= 0.0) || !std::isfinite(cfg.kappa_pi)) {
        throw ValidationError(where + ".kappa_pi", "must be finite and >= 0");
    }
    if (!(cfg.tau_ema > 0.0) || !std::isfinite(cfg.tau_ema)) {
        throw ValidationError(where + ".tau_ema", "must be finite and > 0");
    }
    if (cfg.dy_da.size() != depth) {
        throw ValidationError(where + ".dy_da", "must have " + std::to_string(depth) + " entries");
    }
    if (!cfg.dy_da.all_finite()) {
        throw ValidationError(where + ".dy_da", "entries must be finite");
    }
    if (cfg.u_max && !(*cfg.u_max > 0.0)) {
        throw ValidationError(where + ".u_max", "must be > 0 when set");
    }
    // Precisions must adapt on a much slower time scale than expectations.
    if (cfg.learn_precisions && !cfg.clamp_expectations && cfg.kappa_pi > cfg.kappa_x / 100.0) {
        throw ValidationError(where + ".kappa_pi", "must be <= kappa_x/100 when learning precisions");
    }
}

struct ControllerState {
    GeneralisedSignal mu_x;
    double action = 0.0;
    PrecisionState pr;
    OrderVector ema_sq_z;
    OrderVector ema_sq_w;
    double t = 0.0;

    /// Expectations start on the set-point; smoothed squared errors start at
    /// 1/π so that precision learning begins at its stationary point.
    static ControllerState initial(const GenerativeModel &m, const PrecisionState &pr, double action = 0.0) {
        ControllerState s{m.setpoint, action, pr, OrderVector(pr.log_pi_z.size()), OrderVector(pr.log_pi_w.size()),
                          0.0};
        for (std::size_t i = 0; i < s.ema_sq_z.size(); ++i) {
            s.ema_sq_z[i] = order_enabled(pr.log_pi_z[i]) ? std::exp(-pr.log_pi_z[i]) : 0.0;
        }
        for (std::size_t i = 0; i < s.ema_sq_w.size(); ++i) {
            s.ema_sq_w[i] = order_enabled(pr.log_pi_w[i]) ? std::exp(-pr.log_pi_w[i]) : 0.0;
        }
        return s;
    }

    friend bool operator==(const ControllerState &, const ControllerState &) = default;
};

namespace detail {

inline void require_finite(const ControllerState &s) {
    if (!s.mu_x.orders.all_finite()) {
        throw IntegrationDiverged(s.t, "mu_x");
    }
    if (!std::isfinite(s.action)) {
        throw IntegrationDiverged(s.t, "action");
    }
    if (!s.ema_sq_z.all_finite() || !s.ema_sq_w.all_finite()) {
        throw IntegrationDiverged(s.t, "ema_sq");
    }
    for (std::size_t i = 0; i < s.pr.log_pi_z.size(); ++i) {
        const double l = s.pr.log_pi_z[i];
        if (order_enabled(l) && !std::isfinite(std::exp(l))) {
            throw IntegrationDiverged(s.t, "log_pi_z");
        }
    }
    for (std::size_t i = 0; i < s.pr.log_pi_w.size(); ++i) {
        const double l = s.pr.log_pi_w[i];
        if (order_enabled(l) && !std::isfinite(std::exp(l))) {
            throw IntegrationDiverged(s.t, "log_pi_w");
        }
    }
}

/// Saturated Euler step on the action. While at the bound, only steps that
/// move the action inward are applied, so the accumulated action cannot wind up.
inline double saturated_action(double action, double delta, const std::optional<double> &u_max) {
    double next = action + delta;
    if (!u_max) {
        return next;
    }
    if (std::abs(action) >= *u_max && std::abs(next) > std::abs(action)) {
        next = action;
    }
    return std::clamp(next, -*u_max, *u_max);
}

} // namespace detail

/// Recognition and action update for one tick of length dt.
///
/// Both gradients are evaluated at the incoming state (explicit Euler on the
/// joint system). In clamp mode the expectations are pinned to the set-point
/// signal, which reduces the action law to a classical PID in velocity form.
inline ControllerState step_fast(const ControllerState &s, const ControllerConfig &cfg, const GenerativeModel &m,
                                 const GeneralisedSignal &y, double dt) {
    if (!(dt > 0.0)) {
        throw ValidationError("dt", "must be > 0");
    }
    ControllerState next = s;
    if (cfg.clamp_expectations) {
        next.mu_x = m.setpoint;
    }
    const PredictionErrors eps = prediction_errors(m, y, next.mu_x);
    const double ga = grad_action(m, y, next.mu_x, s.pr, cfg.dy_da);

    if (!cfg.clamp_expectations) {
        const OrderVector g = grad_mu_x(m, y, s.mu_x, s.pr);
        const GeneralisedSignal motion = shift(s.mu_x);
        for (std::size_t i = 0; i < next.mu_x.depth(); ++i) {
            next.mu_x[i] = s.mu_x[i] + dt * (motion[i] - cfg.kappa_x * g[i]);
        }
    }

    next.action = detail::saturated_action(s.action, -dt * cfg.kappa_a * ga, cfg.u_max);

    const double blend = dt / cfg.tau_ema;
    for (std::size_t i = 0; i < eps.z.size(); ++i) {
        next.ema_sq_z[i] += blend * (eps.z[i] * eps.z[i] - next.ema_sq_z[i]);
    }
    for (std::size_t i = 0; i < eps.w.size(); ++i) {
        next.ema_sq_w[i] += blend * (eps.w[i] * eps.w[i] - next.ema_sq_w[i]);
    }
    next.t = s.t + dt;
    detail::require_finite(next);
    return next;
}

/// Gradient descent of the log precisions on the smoothed squared errors.
inline ControllerState step_slow(const ControllerState &s, const ControllerConfig &cfg, const GenerativeModel &m,
                                 double dt) {
    if (!(dt > 0.0)) {
        throw ValidationError("dt", "must be > 0");
    }
    if (!cfg.learn_precisions) {
        throw ValidationError("controller.learn_precisions", "step_slow requires precision learning enabled");
    }
    ControllerState next = s;
    const LogPrecisionGradient g = grad_log_precisions(m, s.ema_sq_z, s.ema_sq_w, s.pr);
    for (std::size_t i = 0; i < g.z.size(); ++i) {
        if (order_enabled(s.pr.log_pi_z[i])) {
            next.pr.log_pi_z[i] -= dt * cfg.kappa_pi * g.z[i];
        }
    }
    for (std::size_t i = 0; i < g.w.size(); ++i) {
        if (order_enabled(s.pr.log_pi_w[i])) {
            next.pr.log_pi_w[i] -= dt * cfg.kappa_pi * g.w[i];
        }
    }
    detail::require_finite(next);
    return next;
}

struct PidGains {
    double ki = 0.0;
    double kp = 0.0;
    double kd = 0.0;

    friend bool operator==(const PidGains &, const PidGains &) = default;
};

/// Observation precisions of orders 0, 1, 2 scaled by the action rate give the
/// integral, proportional and derivative gains. Missing orders give zero gains.
inline PidGains gains_from_precisions(const PrecisionState &pr, double kappa_a) {
    const std::size_t p = pr.log_pi_z.size();
    if (p < 1) {
        throw DepthTooSmall("gains need at least one observation order");
    }
    PidGains g;
    g.ki = kappa_a * pr.pi_z(0);
    g.kp = p > 1 ? kappa_a * pr.pi_z(1) : 0.0;
    g.kd = p > 2 ? kappa_a * pr.pi_z(2) : 0.0;
    return g;
}

} // namespace aipid
