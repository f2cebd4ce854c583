#pragma once

// The controller's linear generative model and its Laplace-form free energy.
//
//   observation   y = obs_gain·x + z          precision π_z per order
//   dynamics     x' = alpha·(v − x) + w       precision π_w per order
//
// Free energy (nats), per scalar error term:
//   F = ½Σ π_z ε_z² + ½Σ π_w ε_w² − ½Σ log π (optional)
//       + ½Σ p_z (π_z − h(η_z))² + ½Σ p_w (π_w − k(η_w))²
//
// Precisions are stored as logs. A precision of exactly zero (log = −∞)
// marks a switched-off order: it contributes nothing and is never learned.

#include <aipid/errors.hpp>
#include <aipid/gencoords.hpp>

#include <cmath>
#include <limits>

namespace aipid {

using PrecisionMap = double (*)(double);

inline double identity_map(double eta) { return eta; }

struct GenerativeModel {
    double alpha = 1.0;     ///< prior-dynamics rate, s⁻¹
    double obs_gain = 1.0;  ///< g(x) = obs_gain·x
    GeneralisedSignal setpoint = GeneralisedSignal(kDefaultDepth);
    /// h(·), k(·): maps from hyperprior targets to precision units.
    /// Any monotone map can be plugged in; both default to identity.
    PrecisionMap hyper_map_z = &identity_map;
    PrecisionMap hyper_map_w = &identity_map;

    std::size_t depth() const noexcept { return setpoint.depth(); }
};

struct PrecisionState {
    OrderVector log_pi_z;        ///< p entries
    OrderVector log_pi_w;        ///< p − 1 entries
    OrderVector hyper_weight_z;  ///< μ_p_z ≥ 0
    OrderVector hyper_weight_w;
    OrderVector hyper_target_z;  ///< η_z > 0
    OrderVector hyper_target_w;

    PrecisionState() : PrecisionState(kDefaultDepth) {}

    /// Unit precisions, no hyperprior pull, targets at 1.
    explicit PrecisionState(std::size_t depth)
        : log_pi_z(depth, 0.0), log_pi_w(depth - 1, 0.0), hyper_weight_z(depth, 0.0),
          hyper_weight_w(depth - 1, 0.0), hyper_target_z(depth, 1.0), hyper_target_w(depth - 1, 1.0) {}

    static PrecisionState from_precisions(const OrderVector &pi_z, const OrderVector &pi_w) {
        if (pi_w.size() + 1 != pi_z.size()) {
            throw DepthMismatch(pi_z.size() - 1, pi_w.size());
        }
        PrecisionState s(pi_z.size());
        for (std::size_t i = 0; i < pi_z.size(); ++i) {
            s.log_pi_z[i] = to_log(pi_z[i]);
        }
        for (std::size_t i = 0; i < pi_w.size(); ++i) {
            s.log_pi_w[i] = to_log(pi_w[i]);
        }
        return s;
    }

    std::size_t depth() const noexcept { return log_pi_z.size(); }

    double pi_z(std::size_t i) const { return std::exp(log_pi_z[i]); }
    double pi_w(std::size_t i) const { return std::exp(log_pi_w[i]); }

    OrderVector pi_z_all() const { return exp_all(log_pi_z); }
    OrderVector pi_w_all() const { return exp_all(log_pi_w); }

    friend bool operator==(const PrecisionState &, const PrecisionState &) = default;

private:
    static double to_log(double pi) {
        if (!(pi >= 0.0) || !std::isfinite(pi)) {
            throw ValidationError("precision", "must be finite and >= 0");
        }
        return pi == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(pi);
    }
    static OrderVector exp_all(const OrderVector &logs) {
        OrderVector out(logs.size());
        for (std::size_t i = 0; i < logs.size(); ++i) {
            out[i] = std::exp(logs[i]);
        }
        return out;
    }
};

inline bool order_enabled(double log_pi) noexcept { return log_pi != -std::numeric_limits<double>::infinity(); }

struct PredictionErrors {
    OrderVector z;  ///< p entries: y − g(μ)
    OrderVector w;  ///< p − 1 entries: μ' − f(μ, v)
};

struct FreeEnergyBreakdown {
    double f_obs = 0.0;
    double f_dyn = 0.0;
    double f_log = 0.0;
    double f_hyper_z = 0.0;
    double f_hyper_w = 0.0;
    double total = 0.0;

    friend bool operator==(const FreeEnergyBreakdown &, const FreeEnergyBreakdown &) = default;
};

namespace detail {

inline void check_depths(const GenerativeModel &m, const GeneralisedSignal &y, const GeneralisedSignal &mu_x) {
    const std::size_t p = m.depth();
    if (y.depth() != p) {
        throw DepthMismatch(p, y.depth());
    }
    if (mu_x.depth() != p) {
        throw DepthMismatch(p, mu_x.depth());
    }
}

inline void check_depths(const GenerativeModel &m, const PrecisionState &pr) {
    const std::size_t p = m.depth();
    if (pr.log_pi_z.size() != p || pr.hyper_weight_z.size() != p || pr.hyper_target_z.size() != p) {
        throw DepthMismatch(p, pr.log_pi_z.size());
    }
    if (pr.log_pi_w.size() != p - 1 || pr.hyper_weight_w.size() != p - 1 || pr.hyper_target_w.size() != p - 1) {
        throw DepthMismatch(p - 1, pr.log_pi_w.size());
    }
}

/// ½ p (π − h(η))², zero for switched-off orders.
inline double hyper_penalty(double log_pi, double weight, double target, PrecisionMap map) {
    if (!order_enabled(log_pi) || weight == 0.0) {
        return 0.0;
    }
    const double r = std::exp(log_pi) - map(target);
    return 0.5 * weight * r * r;
}

/// ∂F/∂log π = π·[½⟨ε²⟩ − ½/π + p(π − h(η))] = ½π⟨ε²⟩ − ½ + pπ(π − h(η)).
inline double log_precision_gradient(double log_pi, double mean_sq, double weight, double target,
                                     PrecisionMap map) {
    if (!order_enabled(log_pi)) {
        return 0.0;
    }
    const double pi = std::exp(log_pi);
    return 0.5 * pi * mean_sq - 0.5 + weight * pi * (pi - map(target));
}

} // namespace detail

inline PredictionErrors prediction_errors(const GenerativeModel &m, const GeneralisedSignal &y,
                                          const GeneralisedSignal &mu_x) {
    detail::check_depths(m, y, mu_x);
    const std::size_t p = m.depth();
    PredictionErrors e{OrderVector(p), OrderVector(p - 1)};
    for (std::size_t i = 0; i < p; ++i) {
        e.z[i] = y[i] - m.obs_gain * mu_x[i];
    }
    for (std::size_t i = 0; i + 1 < p; ++i) {
        e.w[i] = mu_x[i + 1] - m.alpha * (m.setpoint[i] - mu_x[i]);
    }
    return e;
}

inline FreeEnergyBreakdown free_energy(const GenerativeModel &m, const GeneralisedSignal &y,
                                       const GeneralisedSignal &mu_x, const PrecisionState &pr,
                                       bool include_log_terms = false) {
    detail::check_depths(m, pr);
    const PredictionErrors e = prediction_errors(m, y, mu_x);
    FreeEnergyBreakdown b;
    for (std::size_t i = 0; i < e.z.size(); ++i) {
        if (order_enabled(pr.log_pi_z[i])) {
            b.f_obs += 0.5 * pr.pi_z(i) * e.z[i] * e.z[i];
            if (include_log_terms) {
                b.f_log -= 0.5 * pr.log_pi_z[i];
            }
        }
        b.f_hyper_z += detail::hyper_penalty(pr.log_pi_z[i], pr.hyper_weight_z[i], pr.hyper_target_z[i],
                                             m.hyper_map_z);
    }
    for (std::size_t i = 0; i < e.w.size(); ++i) {
        if (order_enabled(pr.log_pi_w[i])) {
            b.f_dyn += 0.5 * pr.pi_w(i) * e.w[i] * e.w[i];
            if (include_log_terms) {
                b.f_log -= 0.5 * pr.log_pi_w[i];
            }
        }
        b.f_hyper_w += detail::hyper_penalty(pr.log_pi_w[i], pr.hyper_weight_w[i], pr.hyper_target_w[i],
                                             m.hyper_map_w);
    }
    b.total = b.f_obs + b.f_dyn + b.f_log + b.f_hyper_z + b.f_hyper_w;
    return b;
}

/// ∂F/∂μ̃x. Order i enters ε_z[i], ε_w[i] (as the state) and ε_w[i−1]
/// (as the derivative of order i−1).
inline OrderVector grad_mu_x(const GenerativeModel &m, const GeneralisedSignal &y, const GeneralisedSignal &mu_x,
                             const PrecisionState &pr) {
    detail::check_depths(m, pr);
    const PredictionErrors e = prediction_errors(m, y, mu_x);
    const std::size_t p = m.depth();
    const OrderVector pi_z = pr.pi_z_all();
    const OrderVector pi_w = pr.pi_w_all();
    OrderVector g(p);
    for (std::size_t i = 0; i < p; ++i) {
        g[i] = -m.obs_gain * pi_z[i] * e.z[i];
        if (i + 1 < p) {
            g[i] += m.alpha * pi_w[i] * e.w[i];
        }
        if (i >= 1) {
            g[i] += pi_w[i - 1] * e.w[i - 1];
        }
    }
    return g;
}

/// ∂F/∂a through the observations only: Σ (∂ỹ/∂a)ᵢ π_zᵢ ε_zᵢ.
inline double grad_action(const GenerativeModel &m, const GeneralisedSignal &y, const GeneralisedSignal &mu_x,
                          const PrecisionState &pr, const OrderVector &dy_da) {
    detail::check_depths(m, pr);
    if (dy_da.size() != m.depth()) {
        throw DepthMismatch(m.depth(), dy_da.size());
    }
    const PredictionErrors e = prediction_errors(m, y, mu_x);
    double g = 0.0;
    for (std::size_t i = 0; i < e.z.size(); ++i) {
        g += dy_da[i] * pr.pi_z(i) * e.z[i];
    }
    return g;
}

struct LogPrecisionGradient {
    OrderVector z;
    OrderVector w;
};

/// ∂F/∂log π given mean squared errors per order (typically smoothed).
inline LogPrecisionGradient grad_log_precisions(const GenerativeModel &m, const OrderVector &mean_sq_z,
                                                const OrderVector &mean_sq_w, const PrecisionState &pr) {
    detail::check_depths(m, pr);
    if (mean_sq_z.size() != pr.log_pi_z.size()) {
        throw DepthMismatch(pr.log_pi_z.size(), mean_sq_z.size());
    }
    if (mean_sq_w.size() != pr.log_pi_w.size()) {
        throw DepthMismatch(pr.log_pi_w.size(), mean_sq_w.size());
    }
    LogPrecisionGradient g{OrderVector(mean_sq_z.size()), OrderVector(mean_sq_w.size())};
    for (std::size_t i = 0; i < g.z.size(); ++i) {
        g.z[i] = detail::log_precision_gradient(pr.log_pi_z[i], mean_sq_z[i], pr.hyper_weight_z[i],
                                                pr.hyper_target_z[i], m.hyper_map_z);
    }
    for (std::size_t i = 0; i < g.w.size(); ++i) {
        g.w[i] = detail::log_precision_gradient(pr.log_pi_w[i], mean_sq_w[i], pr.hyper_weight_w[i],
                                                pr.hyper_target_w[i], m.hyper_map_w);
    }
    return g;
}

/// Same gradient evaluated on the instantaneous errors of (y, μ̃x).
inline LogPrecisionGradient grad_log_precisions(const GenerativeModel &m, const GeneralisedSignal &y,
                                                const GeneralisedSignal &mu_x, const PrecisionState &pr) {
    const PredictionErrors e = prediction_errors(m, y, mu_x);
    OrderVector sq_z(e.z.size());
    OrderVector sq_w(e.w.size());
    for (std::size_t i = 0; i < e.z.size(); ++i) {
        sq_z[i] = e.z[i] * e.z[i];
    }
    for (std::size_t i = 0; i < e.w.size(); ++i) {
        sq_w[i] = e.w[i] * e.w[i];
    }
    return grad_log_precisions(m, sq_z, sq_w, pr);
}

} // namespace aipid
