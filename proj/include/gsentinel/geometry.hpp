#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

namespace gsentinel::geom {

struct Vec2 {
    double x = 0.0, y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(Vec2, Vec2) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

inline double radians(double deg) { return deg * std::numbers::pi / 180.0; }

inline Vec2 rotate(Vec2 p, double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    return {c * p.x - s * p.y, s * p.x + c * p.y};
}

using Polygon = std::vector<Vec2>;

inline double signed_area(const Polygon& poly) {
    double a = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i)
        a += cross(poly[i], poly[(i + 1) % n]);
    return 0.5 * a;
}

inline double perimeter(const Polygon& poly) {
    double len = 0.0;
    for (std::size_t i = 0, n = poly.size(); i < n; ++i)
        len += norm(poly[(i + 1) % n] - poly[i]);
    return len;
}

inline Polygon ccw(Polygon poly) {
    if (signed_area(poly) < 0.0)
        std::reverse(poly.begin(), poly.end());
    return poly;
}

namespace detail {
inline bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
    const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
    return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0)) && d1 != 0 && d2 != 0 && d3 != 0 && d4 != 0;
}
} // namespace detail

/// True when no two non-adjacent edges intersect and no edge is degenerate.
inline bool is_simple(const Polygon& poly) {
    const std::size_t n = poly.size();
    if (n < 3)
        return false;
    for (std::size_t i = 0; i < n; ++i) {
        if (poly[i] == poly[(i + 1) % n])
            return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (j == i + 1 || (i == 0 && j == n - 1))
                continue;
            if (detail::segments_cross(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n]))
                return false;
        }
    }
    return true;
}

/// Miter offset of a CCW polygon towards its interior by `d`.
/// Adequate for the rectilinear footprints used here; not a general offsetter.
inline Polygon inset(const Polygon& poly, double d) {
    const std::size_t n = poly.size();
    Polygon out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const Vec2 prev = poly[(i + n - 1) % n], cur = poly[i], next = poly[(i + 1) % n];
        const Vec2 e1 = (1.0 / norm(cur - prev)) * (cur - prev);
        const Vec2 e2 = (1.0 / norm(next - cur)) * (next - cur);
        const Vec2 n1{-e1.y, e1.x}, n2{-e2.y, e2.x};
        const double k = 1.0 + dot(n1, n2);
        out[i] = cur + (d / k) * (n1 + n2);
    }
    return out;
}

inline Polygon transform(const Polygon& poly, double rad, Vec2 offset) {
    Polygon out;
    out.reserve(poly.size());
    for (auto p : poly)
        out.push_back(rotate(p, rad) + offset);
    return out;
}

struct Segment {
    Vec2 a, b;
};

/// Parallel hatch lines at direction `dir_rad`, spaced `spacing`, on a grid
/// anchored at `anchor`, clipped to the polygon (even-odd rule). Lines are
/// returned in sweep order with alternating direction.
inline std::vector<Segment> hatch(const Polygon& poly, double dir_rad, double spacing, Vec2 anchor,
                                  double min_length) {
    // Work in a frame where hatch lines are horizontal.
    Polygon local;
    local.reserve(poly.size());
    for (auto p : poly)
        local.push_back(rotate(p - anchor, -dir_rad));
    double lo = local.front().y, hi = lo;
    for (auto p : local) {
        lo = std::min(lo, p.y);
        hi = std::max(hi, p.y);
    }

    std::vector<Segment> out;
    const long first = static_cast<long>(std::ceil(lo / spacing - 0.5));
    const long last = static_cast<long>(std::floor(hi / spacing - 0.5));
    std::vector<double> xs;
    bool forward = true;
    for (long k = first; k <= last; ++k) {
        const double y = (static_cast<double>(k) + 0.5) * spacing;
        xs.clear();
        for (std::size_t i = 0, n = local.size(); i < n; ++i) {
            const Vec2 p = local[i], q = local[(i + 1) % n];
            if ((p.y <= y) == (q.y <= y))
                continue;
            xs.push_back(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
        }
        std::sort(xs.begin(), xs.end());
        std::vector<Segment> row;
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            if (xs[i + 1] - xs[i] < min_length)
                continue;
            row.push_back({{xs[i], y}, {xs[i + 1], y}});
        }
        if (row.empty())
            continue;
        if (!forward) {
            std::reverse(row.begin(), row.end());
            for (auto& s : row)
                std::swap(s.a, s.b);
        }
        forward = !forward;
        for (auto& s : row)
            out.push_back({rotate(s.a, dir_rad) + anchor, rotate(s.b, dir_rad) + anchor});
    }
    return out;
}

} // namespace gsentinel::geom
