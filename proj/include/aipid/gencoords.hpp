#pragma once

// Generalised coordinates of motion: a scalar signal carried together with
// its first few temporal derivatives ("embedding orders").

#include <aipid/errors.hpp>

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>

namespace aipid {

inline constexpr std::size_t kMaxDepth = 6;
inline constexpr std::size_t kDefaultDepth = 3;

/// Fixed-capacity vector of per-order scalars. Lives on the stack.
class OrderVector {
public:
    OrderVector() = default;

    explicit OrderVector(std::size_t n, double fill = 0.0) : size_(n) {
        if (n > kMaxDepth) {
            throw DepthTooSmall("embedding depth " + std::to_string(n) + " exceeds maximum " +
                                std::to_string(kMaxDepth));
        }
        std::fill_n(data_.begin(), n, fill);
    }

    OrderVector(std::initializer_list<double> values) : OrderVector(values.size()) {
        std::copy(values.begin(), values.end(), data_.begin());
    }

    explicit OrderVector(std::span<const double> values) : OrderVector(values.size()) {
        std::copy(values.begin(), values.end(), data_.begin());
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    double &operator[](std::size_t i) noexcept {
        assert(i < size_);
        return data_[i];
    }
    double operator[](std::size_t i) const noexcept {
        assert(i < size_);
        return data_[i];
    }

    double *begin() noexcept { return data_.data(); }
    double *end() noexcept { return data_.data() + size_; }
    const double *begin() const noexcept { return data_.data(); }
    const double *end() const noexcept { return data_.data() + size_; }

    std::span<const double> view() const noexcept { return {data_.data(), size_}; }

    bool all_finite() const noexcept {
        return std::all_of(begin(), end(), [](double v) { return std::isfinite(v); });
    }

    friend bool operator==(const OrderVector &a, const OrderVector &b) noexcept {
        return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
    }

private:
    std::array<double, kMaxDepth> data_{};
    std::size_t size_ = 0;
};

/// A signal and its derivatives at one instant. Order i is in units·s⁻ⁱ.
struct GeneralisedSignal {
    OrderVector orders;

    GeneralisedSignal() : orders(kDefaultDepth) {}
    explicit GeneralisedSignal(std::size_t depth) : orders(depth) {
        if (depth == 0) {
            throw DepthTooSmall("embedding depth must be at least 1");
        }
    }
    GeneralisedSignal(std::initializer_list<double> values) : orders(values) {
        if (values.size() == 0) {
            throw DepthTooSmall("embedding depth must be at least 1");
        }
    }
    explicit GeneralisedSignal(const OrderVector &values) : orders(values) {
        if (values.empty()) {
            throw DepthTooSmall("embedding depth must be at least 1");
        }
    }

    /// Value at order 0 and zero at every higher order.
    static GeneralisedSignal constant(double value, std::size_t depth) {
        GeneralisedSignal g(depth);
        g.orders[0] = value;
        return g;
    }

    std::size_t depth() const noexcept { return orders.size(); }
    double &operator[](std::size_t i) noexcept { return orders[i]; }
    double operator[](std::size_t i) const noexcept { return orders[i]; }

    friend bool operator==(const GeneralisedSignal &, const GeneralisedSignal &) = default;

    friend GeneralisedSignal operator+(GeneralisedSignal a, const GeneralisedSignal &b) {
        if (a.depth() != b.depth()) {
            throw DepthMismatch(a.depth(), b.depth());
        }
        for (std::size_t i = 0; i < a.depth(); ++i) {
            a[i] += b[i];
        }
        return a;
    }

    friend GeneralisedSignal operator*(double s, GeneralisedSignal g) {
        for (double &v : g.orders) {
            v *= s;
        }
        return g;
    }
};

/// Derivative operator on embedding orders; the top order is truncated to zero.
inline GeneralisedSignal shift(const GeneralisedSignal &g) {
    GeneralisedSignal out(g.depth());
    for (std::size_t i = 0; i + 1 < g.depth(); ++i) {
        out[i] = g[i + 1];
    }
    return out;
}

/// Builds a generalised signal from the most recent samples (oldest first)
/// using backward differences: order i is the i-th backward difference / dtⁱ.
inline GeneralisedSignal embed(std::span<const double> window, double dt, std::size_t depth = kDefaultDepth) {
    if (depth == 0 || depth > kMaxDepth) {
        throw DepthTooSmall("embedding depth must be in 1.." + std::to_string(kMaxDepth));
    }
    if (window.size() < depth) {
        throw InsufficientWindow(window.size(), depth);
    }
    if (!(dt > 0.0) || !std::isfinite(dt)) {
        throw ValidationError("dt", "must be finite and > 0");
    }
    // Newest `depth` samples, repeatedly differenced in place.
    std::array<double, kMaxDepth> diff{};
    std::copy(window.end() - static_cast<std::ptrdiff_t>(depth), window.end(), diff.begin());

    GeneralisedSignal out(depth);
    out[0] = diff[depth - 1];
    double scale = 1.0;
    for (std::size_t order = 1; order < depth; ++order) {
        for (std::size_t k = depth - 1; k >= order; --k) {
            diff[k] -= diff[k - 1];
        }
        scale *= dt;
        out[order] = diff[depth - 1] / scale;
    }
    return out;
}

} // namespace aipid
