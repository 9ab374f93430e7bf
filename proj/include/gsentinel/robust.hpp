#pragma once

// Robust location/scale helpers for outlier screening.

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace gsentinel::robust {

/// Median with the usual midpoint for even sizes. Empty input gives NaN.
inline double median(std::span<const double> xs) {
    if (xs.empty())
        return std::nan("");
    std::vector<double> v(xs.begin(), xs.end());
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    const double hi = v[mid];
    if (v.size() % 2 == 1)
        return hi;
    const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lo + hi);
}

/// Median absolute deviation (unscaled).
inline double mad(std::span<const double> xs, double center) {
    std::vector<double> dev;
    dev.reserve(xs.size());
    for (double x : xs)
        dev.push_back(std::abs(x - center));
    return median(dev);
}

/// Linear-interpolated quantile, q in [0, 1] (numpy "linear" method).
inline double quantile(std::span<const double> xs, double q) {
    std::vector<double> v(xs.begin(), xs.end());
    std::sort(v.begin(), v.end());
    if (v.empty())
        return std::nan("");
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

inline constexpr double kModifiedZConstant = 0.6745;

/// Signed outlier score per element. Uses the modified z-score
/// 0.6745 (x - median) / MAD; when MAD is zero the score is expressed in
/// units of the 1.5 IQR fence distance instead, so |score| > 1 means outside
/// the Tukey fences. `used_iqr` reports which rule applied.
struct OutlierScores {
    std::vector<double> scores;
    double center = 0.0;
    double scale = 0.0;
    bool used_iqr = false;
};

inline OutlierScores modified_z(std::span<const double> xs) {
    OutlierScores out;
    out.center = median(xs);
    out.scale = mad(xs, out.center);
    out.scores.resize(xs.size(), 0.0);
    if (out.scale > 0.0) {
        for (std::size_t i = 0; i < xs.size(); ++i)
            out.scores[i] = kModifiedZConstant * (xs[i] - out.center) / out.scale;
        return out;
    }
    out.used_iqr = true;
    const double q1 = quantile(xs, 0.25), q3 = quantile(xs, 0.75);
    const double fence = 1.5 * (q3 - q1);
    out.scale = fence;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double x = xs[i];
        double beyond = 0.0;
        if (x > q3 + fence)
            beyond = x - q3;
        else if (x < q1 - fence)
            beyond = x - q1;
        if (beyond == 0.0)
            continue;
        out.scores[i] = fence > 0.0 ? beyond / fence : std::copysign(INFINITY, beyond);
    }
    return out;
}

} // namespace gsentinel::robust
