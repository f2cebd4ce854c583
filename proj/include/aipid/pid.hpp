#pragma once

// Classical PID in position form, used as the reference the clamped
// active-inference controller is checked against.

#include <aipid/errors.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <utility>

namespace aipid {

struct PidState {
    double kp = 0.0;
    double ki = 0.0;
    double kd = 0.0;
    double integral = 0.0;
    std::optional<double> prev_error;  ///< unset until the first sample
    double derivative = 0.0;           ///< filtered derivative of the error
    /// Derivative filter: first-order lag with time constant kd/(kp·n_filt).
    /// n_filt <= 0 (or kp == 0) disables the filter.
    double n_filt = 10.0;
    std::optional<double> u_max;

    friend bool operator==(const PidState &, const PidState &) = default;
};

/// One sample of the controller. The integral uses the rectangle rule
/// including the current error; with u_max set the integral is frozen while
/// the output is saturated and the error would drive it further out.
inline std::pair<PidState, double> pid_step(PidState ps, double error, double dt) {
    if (!(dt > 0.0)) {
        throw ValidationError("dt", "must be > 0");
    }
    const double raw = ps.prev_error ? (error - *ps.prev_error) / dt : 0.0;
    const double tf = (ps.n_filt > 0.0 && ps.kp > 0.0) ? ps.kd / (ps.kp * ps.n_filt) : 0.0;
    ps.derivative += (dt / (tf + dt)) * (raw - ps.derivative);
    ps.prev_error = error;

    const double integral = ps.integral + error * dt;
    double u = ps.kp * error + ps.ki * integral + ps.kd * ps.derivative;
    if (ps.u_max) {
        const bool winding = (u > *ps.u_max && error > 0.0) || (u < -*ps.u_max && error < 0.0);
        if (winding && ps.ki != 0.0) {
            u = ps.kp * error + ps.ki * ps.integral + ps.kd * ps.derivative;
        } else {
            ps.integral = integral;
        }
        u = std::clamp(u, -*ps.u_max, *ps.u_max);
    } else {
        ps.integral = integral;
    }
    return {ps, u};
}

} // namespace aipid
