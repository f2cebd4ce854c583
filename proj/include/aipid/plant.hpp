#pragma once

// Ground-truth processes, load disturbances and sensors. These are kept apart
// from the controller's generative model so that model mismatch is possible.

#include <aipid/errors.hpp>
#include <aipid/noise.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace aipid {

enum class PlantKind { first_order, second_order, nonlinear_first_order };

inline std::string_view to_string(PlantKind k) {
    switch (k) {
    case PlantKind::first_order: return "first_order";
    case PlantKind::second_order: return "second_order";
    case PlantKind::nonlinear_first_order: return "nonlinear_first_order";
    }
    return "first_order";
}

struct PlantSpec {
    PlantKind kind = PlantKind::first_order;
    double a_p = -1.0;   ///< state rate, s⁻¹ (first-order kinds)
    double b_p = 1.0;    ///< input gain
    double c_p = 1.0;    ///< output gain
    double omega = 1.0;  ///< natural frequency, rad/s (second order)
    double zeta = 0.7;   ///< damping ratio (second order)
    double b_nl = 0.0;   ///< strength of the tanh drift term (nonlinear)
    NoiseSpec process_noise;
    double x0 = 0.0;
    double v0 = 0.0;     ///< initial velocity (second order)

    friend bool operator==(const PlantSpec &, const PlantSpec &) = default;
};

struct PlantState {
    double x = 0.0;
    double xdot = 0.0;  ///< used by the second-order plant only

    friend bool operator==(const PlantState &, const PlantState &) = default;
};

inline PlantState initial_state(const PlantSpec &spec) { return {spec.x0, spec.v0}; }

inline void validate(const PlantSpec &spec, const std::string &where = "plant") {
    auto finite = [&](double v, const char *name) {
        if (!std::isfinite(v)) {
            throw ValidationError(where + "." + name, "must be finite");
        }
    };
    finite(spec.a_p, "a_p");
    finite(spec.b_p, "b_p");
    finite(spec.c_p, "c_p");
    finite(spec.b_nl, "b_nl");
    finite(spec.x0, "x0");
    finite(spec.v0, "v0");
    if (spec.kind == PlantKind::second_order) {
        if (!(spec.omega > 0.0) || !std::isfinite(spec.omega)) {
            throw ValidationError(where + ".omega", "must be > 0");
        }
        if (!(spec.zeta >= 0.0) || !std::isfinite(spec.zeta)) {
            throw ValidationError(where + ".zeta", "must be >= 0");
        }
    }
    validate(spec.process_noise, where + ".process_noise");
}

/// One Euler-Maruyama step. `w` is a density-scaled driving-noise sample
/// (see sample_noise), `d` the load disturbance at the plant input.
///
/// The second-order plant is ẍ + 2ζωẋ + ω²x = ω²·(b_p(u + d) + w), i.e. unit
/// DC gain from the forcing, integrated semi-implicitly (velocity first).
inline PlantState plant_step(PlantState s, const PlantSpec &spec, double u, double d, double w, double dt,
                             double t = 0.0) {
    if (!(dt > 0.0)) {
        throw ValidationError("dt", "must be > 0");
    }
    const double forcing = spec.b_p * (u + d) + w;
    switch (spec.kind) {
    case PlantKind::first_order:
        s.x += dt * (spec.a_p * s.x + forcing);
        break;
    case PlantKind::nonlinear_first_order:
        s.x += dt * (spec.a_p * s.x + spec.b_nl * std::tanh(s.x) + forcing);
        break;
    case PlantKind::second_order: {
        const double w2 = spec.omega * spec.omega;
        s.xdot += dt * (w2 * (forcing - s.x) - 2.0 * spec.zeta * spec.omega * s.xdot);
        s.x += dt * s.xdot;
        break;
    }
    }
    if (!std::isfinite(s.x) || !std::isfinite(s.xdot)) {
        throw PlantDiverged(t + dt);
    }
    return s;
}

enum class DisturbanceKind { none, step, ramp, polynomial };

inline std::string_view to_string(DisturbanceKind k) {
    switch (k) {
    case DisturbanceKind::none: return "none";
    case DisturbanceKind::step: return "step";
    case DisturbanceKind::ramp: return "ramp";
    case DisturbanceKind::polynomial: return "polynomial";
    }
    return "none";
}

struct DisturbanceSpec {
    DisturbanceKind kind = DisturbanceKind::none;
    double amplitude = 0.0;            ///< step height, input units
    double onset = 0.0;                ///< s
    double slope = 0.0;                ///< ramp rate, input units/s
    std::vector<double> coefficients;  ///< polynomial c₀, c₁, ... in (t − onset)

    friend bool operator==(const DisturbanceSpec &, const DisturbanceSpec &) = default;
};

inline void validate(const DisturbanceSpec &spec, const std::string &where = "disturbance") {
    if (!(spec.onset >= 0.0) || !std::isfinite(spec.onset)) {
        throw ValidationError(where + ".onset", "must be finite and >= 0");
    }
    if (!std::isfinite(spec.amplitude)) {
        throw ValidationError(where + ".amplitude", "must be finite");
    }
    if (!std::isfinite(spec.slope)) {
        throw ValidationError(where + ".slope", "must be finite");
    }
    for (double c : spec.coefficients) {
        if (!std::isfinite(c)) {
            throw ValidationError(where + ".coefficients", "entries must be finite");
        }
    }
}

inline double disturbance_at(const DisturbanceSpec &spec, double t) {
    const double since = std::max(0.0, t - spec.onset);
    switch (spec.kind) {
    case DisturbanceKind::none: return 0.0;
    case DisturbanceKind::step: return t >= spec.onset ? spec.amplitude : 0.0;
    case DisturbanceKind::ramp: return spec.slope * since;
    case DisturbanceKind::polynomial: {
        if (t < spec.onset) {
            return 0.0;
        }
        // Horner
        double acc = 0.0;
        for (auto it = spec.coefficients.rbegin(); it != spec.coefficients.rend(); ++it) {
            acc = acc * since + *it;
        }
        return acc;
    }
    }
    return 0.0;
}

/// Linear ramp of the measurement-noise sigma between two instants.
struct VolatilityRamp {
    double start_sigma = 0.0;
    double end_sigma = 0.0;
    double t_start = 0.0;
    double t_end = 0.0;

    friend bool operator==(const VolatilityRamp &, const VolatilityRamp &) = default;
};

struct SensorSpec {
    NoiseSpec meas_noise;
    std::optional<VolatilityRamp> volatility;

    friend bool operator==(const SensorSpec &, const SensorSpec &) = default;
};

inline void validate(const SensorSpec &spec, const std::string &where = "sensor") {
    validate(spec.meas_noise, where + ".noise");
    if (spec.volatility) {
        const VolatilityRamp &v = *spec.volatility;
        if (!(v.start_sigma >= 0.0) || !(v.end_sigma >= 0.0) || !std::isfinite(v.start_sigma) ||
            !std::isfinite(v.end_sigma)) {
            throw ValidationError(where + ".volatility", "sigmas must be finite and >= 0");
        }
        if (!(v.t_end >= v.t_start)) {
            throw ValidationError(where + ".volatility.t_end", "must be >= t_start");
        }
    }
}

/// Per-sample standard deviation of the measurement noise at time t.
inline double sensor_sigma_at(const SensorSpec &spec, double t) {
    if (!spec.volatility) {
        return spec.meas_noise.sigma;
    }
    const VolatilityRamp &v = *spec.volatility;
    if (t <= v.t_start) {
        return v.start_sigma;
    }
    if (t >= v.t_end) {
        return v.end_sigma;
    }
    const double frac = (t - v.t_start) / (v.t_end - v.t_start);
    return v.start_sigma + frac * (v.end_sigma - v.start_sigma);
}

/// c_p·x plus one measurement-noise sample. The noise stream has unit
/// variance; its per-sample sigma follows the volatility ramp.
inline double measure(double x, double c_p, const SensorSpec &sensor, double t, UnitNoiseStream &noise) {
    const double sigma = sensor_sigma_at(sensor, t);
    const double unit = noise.next();
    return c_p * x + sigma * unit;
}

inline UnitNoiseStream make_sensor_stream(const SensorSpec &sensor, std::uint64_t seed, double dt) {
    return UnitNoiseStream(sensor.meas_noise.kind, sensor.meas_noise.gamma, seed, dt);
}

} // namespace aipid
