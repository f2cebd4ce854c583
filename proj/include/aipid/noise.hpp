#pragma once

// White and coloured Gaussian noise synthesis with reproducible seeding.
//
// std::normal_distribution is implementation-defined, so sample paths would
// differ between standard libraries. GaussianSource draws from mt19937_64
// (fully specified) and applies Box-Muller itself.

#include <aipid/errors.hpp>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace aipid {

enum class NoiseKind { white, coloured };

inline std::string_view to_string(NoiseKind k) { return k == NoiseKind::white ? "white" : "coloured"; }

struct NoiseSpec {
    NoiseKind kind = NoiseKind::white;
    double sigma = 0.0;   ///< standard deviation, signal units
    double gamma = 0.1;   ///< Gaussian kernel width in seconds (coloured only)
    std::uint64_t seed = 0;

    friend bool operator==(const NoiseSpec &, const NoiseSpec &) = default;
};

inline void validate(const NoiseSpec &spec, const std::string &where) {
    if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) {
        throw ValidationError(where + ".sigma", "must be finite and >= 0");
    }
    if (spec.kind == NoiseKind::coloured && !(spec.gamma > 0.0 && std::isfinite(spec.gamma))) {
        throw ValidationError(where + ".gamma", "must be > 0 for coloured noise");
    }
}

/// splitmix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t combine_seeds(std::uint64_t a, std::uint64_t b) noexcept {
    return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

class GaussianSource {
public:
    explicit GaussianSource(std::uint64_t seed) : engine_(mix_seed(seed)) {}

    double operator()() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

private:
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Unit-normalised Gaussian kernel (sums to 1), truncated at ±4 widths.
inline std::vector<double> gaussian_kernel(double gamma, double dt) {
    const auto half = static_cast<std::size_t>(std::ceil(4.0 * gamma / dt));
    std::vector<double> k(2 * half + 1);
    double sum = 0.0;
    for (std::size_t i = 0; i < k.size(); ++i) {
        const double tau = (static_cast<double>(i) - static_cast<double>(half)) * dt;
        k[i] = std::exp(-0.5 * (tau * tau) / (gamma * gamma));
        sum += k[i];
    }
    for (double &v : k) {
        v /= sum;
    }
    return k;
}

/// Streaming zero-mean noise with unit marginal variance (in expectation).
/// Coloured samples are white samples convolved with a Gaussian kernel and
/// rescaled by 1/‖kernel‖₂. The kernel window is pre-filled, so every output
/// sees the full kernel and the stream is stationary from the first sample.
class UnitNoiseStream {
public:
    UnitNoiseStream(NoiseKind kind, double gamma, std::uint64_t seed, double dt) : kind_(kind), gauss_(seed) {
        if (kind_ == NoiseKind::coloured) {
            kernel_ = gaussian_kernel(gamma, dt);
            double norm2 = 0.0;
            for (double k : kernel_) {
                norm2 += k * k;
            }
            rescale_ = 1.0 / std::sqrt(norm2);
            ring_.resize(kernel_.size());
            for (std::size_t i = 0; i + 1 < ring_.size(); ++i) {
                ring_[i] = gauss_();
            }
            head_ = ring_.size() - 1;
        }
    }

    double next() {
        if (kind_ == NoiseKind::white) {
            return gauss_();
        }
        // ring_[head_] receives the newest sample; kernel_[0] pairs with the oldest.
        ring_[head_] = gauss_();
        const std::size_t n = ring_.size();
        std::size_t idx = (head_ + 1) % n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += kernel_[j] * ring_[idx];
            idx = idx + 1 == n ? 0 : idx + 1;
        }
        head_ = (head_ + 1) % n;
        return acc * rescale_;
    }

private:
    NoiseKind kind_;
    GaussianSource gauss_;
    std::vector<double> kernel_;
    std::vector<double> ring_;
    std::size_t head_ = 0;
    double rescale_ = 1.0;
};

inline std::vector<double> unit_noise_path(NoiseKind kind, double gamma, std::uint64_t seed, std::size_t n,
                                           double dt) {
    UnitNoiseStream stream(kind, gamma, seed, dt);
    std::vector<double> out(n);
    for (double &v : out) {
        v = stream.next();
    }
    return out;
}

/// White samples carry density scaling (std sigma/√dt) for Euler integration
/// of driving noise; coloured samples have std ≈ sigma.
inline std::vector<double> sample_noise(const NoiseSpec &spec, std::size_t n, double dt) {
    if (n == 0) {
        throw ValidationError("n", "must be >= 1");
    }
    if (!(dt > 0.0)) {
        throw ValidationError("dt", "must be > 0");
    }
    validate(spec, "noise");
    if (spec.sigma == 0.0) {
        return std::vector<double>(n, 0.0);
    }
    std::vector<double> path = unit_noise_path(spec.kind, spec.gamma, spec.seed, n, dt);
    const double scale = spec.kind == NoiseKind::white ? spec.sigma / std::sqrt(dt) : spec.sigma;
    for (double &v : path) {
        v *= scale;
    }
    return path;
}

} // namespace aipid
