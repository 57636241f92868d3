// SPDX-License-Identifier: MIT
//
// Scalar processes sampled on a time grid and the quadrature used on them.
#pragma once

#include "mfgliq/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace mfgliq {

struct ProcessPath {
    std::vector<double> times;
    std::vector<double> values;

    ProcessPath() = default;
    ProcessPath(std::vector<double> t, std::vector<double> v) : times(std::move(t)), values(std::move(v)) {
        if (times.size() != values.size()) throw InvalidArgument("path: times/values size mismatch");
    }

    static ProcessPath constant(const std::vector<double>& t, double v) { return {t, std::vector<double>(t.size(), v)}; }

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t i) const { return values[i]; }
    [[nodiscard]] double& operator[](std::size_t i) { return values[i]; }
    [[nodiscard]] double front() const { return values.front(); }
    [[nodiscard]] double back() const { return values.back(); }

    // Four-point Lagrange interpolation; exact at nodes.
    [[nodiscard]] double at(double t) const;
};

inline void require_same_grid(const ProcessPath& a, const ProcessPath& b, const char* what) {
    if (a.times.size() != b.times.size())
        throw InvalidArgument(std::string(what) + ": grid mismatch (" + std::to_string(a.times.size()) + " vs " +
                              std::to_string(b.times.size()) + " nodes)");
    for (std::size_t i = 0; i < a.times.size(); ++i)
        if (a.times[i] != b.times[i]) throw InvalidArgument(std::string(what) + ": grid mismatch at node " + std::to_string(i));
}

namespace quad {

// 8-point Gauss-Legendre on [-1, 1].
inline constexpr std::array<double, 8> kGL8Nodes = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
    0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> kGL8Weights = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
    0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};

template <class F>
double gauss_legendre(F&& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < kGL8Nodes.size(); ++i) s += kGL8Weights[i] * f(c + h * kGL8Nodes[i]);
    return s * h;
}

namespace detail {

inline constexpr std::size_t kWindow = 6;

// Window of kWindow node indices around interval [k, k+1], clamped to the ends.
inline std::size_t window_start(std::size_t k, std::size_t n) {
    if (n <= kWindow) return 0;
    const std::size_t lead = kWindow / 2 - 1;
    if (k < lead) return 0;
    if (k - lead + kWindow > n) return n - kWindow;
    return k - lead;
}

inline double lagrange(std::span<const double> t, std::span<const double> v, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        double w = 1.0;
        for (std::size_t j = 0; j < t.size(); ++j)
            if (j != i) w *= (x - t[j]) / (t[i] - t[j]);
        s += w * v[i];
    }
    return s;
}

}  // namespace detail

// Integral over [t_k, t_{k+1}] of the quintic through the six nearest nodes.
inline double interval_integral(std::span<const double> t, std::span<const double> v, std::size_t k) {
    const std::size_t n = t.size();
    if (n == 2) return 0.5 * (t[1] - t[0]) * (v[0] + v[1]);
    const std::size_t m = std::min(detail::kWindow, n);
    const std::size_t s = detail::window_start(k, n);
    auto tw = t.subspan(s, m);
    auto vw = v.subspan(s, m);
    // 3-point Gauss-Legendre is exact for the quintic.
    static constexpr double g = 0.7745966692414834;
    const double c = 0.5 * (t[k] + t[k + 1]), h = 0.5 * (t[k + 1] - t[k]);
    return h * (5.0 / 9.0 * detail::lagrange(tw, vw, c - g * h) + 8.0 / 9.0 * detail::lagrange(tw, vw, c) +
                5.0 / 9.0 * detail::lagrange(tw, vw, c + g * h));
}

// out[k] = integral from t_0 to t_k.
inline std::vector<double> cumulative(std::span<const double> t, std::span<const double> v) {
    if (t.size() != v.size()) throw InvalidArgument("quadrature: size mismatch");
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t k = 0; k + 1 < t.size(); ++k) out[k + 1] = out[k] + interval_integral(t, v, k);
    return out;
}

// out[k] = integral from t_k to t_last.
inline std::vector<double> cumulative_from_end(std::span<const double> t, std::span<const double> v) {
    if (t.size() != v.size()) throw InvalidArgument("quadrature: size mismatch");
    std::vector<double> out(t.size(), 0.0);
    for (std::size_t k = t.size() - 1; k-- > 0;) out[k] = out[k + 1] + interval_integral(t, v, k);
    return out;
}

inline double integral(std::span<const double> t, std::span<const double> v) {
    if (t.size() != v.size()) throw InvalidArgument("quadrature: size mismatch");
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < t.size(); ++k) s += interval_integral(t, v, k);
    return s;
}

}  // namespace quad

inline double ProcessPath::at(double t) const {
    if (times.empty()) throw InvalidArgument("path: empty");
    if (t <= times.front()) return values.front();
    if (t >= times.back()) return values.back();
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = static_cast<std::size_t>(it - times.begin()) - 1;
    if (times[k] == t) return values[k];
    const std::size_t n = times.size();
    const std::size_t m = std::min(quad::detail::kWindow, n);
    const std::size_t s = quad::detail::window_start(k, n);
    return quad::detail::lagrange(std::span(times).subspan(s, m), std::span(values).subspan(s, m), t);
}

// Discrete L2 norm sqrt(int f^2 dt) over the path's own nodes.
inline double l2_norm(const ProcessPath& p) {
    std::vector<double> sq(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) sq[i] = p[i] * p[i];
    return std::sqrt(std::max(0.0, quad::integral(p.times, sq)));
}

inline double l2_distance(const ProcessPath& a, const ProcessPath& b) {
    require_same_grid(a, b, "l2_distance");
    std::vector<double> sq(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) sq[i] = (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(std::max(0.0, quad::integral(a.times, sq)));
}

// Restriction to the first `count` nodes.
inline ProcessPath head(const ProcessPath& p, std::size_t count) {
    count = std::min(count, p.size());
    return {std::vector<double>(p.times.begin(), p.times.begin() + static_cast<std::ptrdiff_t>(count)),
            std::vector<double>(p.values.begin(), p.values.begin() + static_cast<std::ptrdiff_t>(count))};
}

template <class F>
ProcessPath map_times(const std::vector<double>& times, F&& f) {
    std::vector<double> v(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) v[i] = f(times[i]);
    return {times, std::move(v)};
}

}  // namespace mfgliq
