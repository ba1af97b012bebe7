#pragma once

// Planar geometry primitives. Coordinates are projected meters.

#include "gridres/common.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace gridres::geo {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point&, const Point&) = default;
    Point operator+(const Point& o) const { return {x + o.x, y + o.y}; }
    Point operator-(const Point& o) const { return {x - o.x, y - o.y}; }
    Point operator*(double s) const { return {x * s, y * s}; }
};

inline double dot(const Point& a, const Point& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Point& a, const Point& b) { return a.x * b.y - a.y * b.x; }
inline double distance(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

/// Axis-aligned rectangle, min corner inclusive.
struct Rect {
    double min_x = 0.0;
    double min_y = 0.0;
    double max_x = 0.0;
    double max_y = 0.0;

    double width() const { return max_x - min_x; }
    double height() const { return max_y - min_y; }
    double area() const { return width() * height(); }
    Point center() const { return {(min_x + max_x) / 2.0, (min_y + max_y) / 2.0}; }
    bool degenerate() const { return !(width() > 0.0) || !(height() > 0.0); }
    bool contains(const Point& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
    bool overlaps(const Rect& o) const {
        return min_x <= o.max_x && o.min_x <= max_x && min_y <= o.max_y && o.min_y <= max_y;
    }
    /// Counter-clockwise corner ring.
    std::vector<Point> ring() const {
        return {{min_x, min_y}, {max_x, min_y}, {max_x, max_y}, {min_x, max_y}};
    }
    Rect translated(double dx, double dy) const { return {min_x + dx, min_y + dy, max_x + dx, max_y + dy}; }
};

inline Rect bounding_box(std::span<const Point> pts) {
    Rect r{kInf, kInf, -kInf, -kInf};
    for (const auto& p : pts) {
        r.min_x = std::min(r.min_x, p.x);
        r.min_y = std::min(r.min_y, p.y);
        r.max_x = std::max(r.max_x, p.x);
        r.max_y = std::max(r.max_y, p.y);
    }
    return r;
}

/// Shoelace signed area of an open ring (last vertex connects to first).
inline double signed_area(std::span<const Point> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += cross(ring[i], ring[(i + 1) % n]);
    return s / 2.0;
}

inline double area(std::span<const Point> ring) { return std::abs(signed_area(ring)); }

inline double rect_distance(const Point& p, const Rect& r) {
    const double dx = std::max({r.min_x - p.x, 0.0, p.x - r.max_x});
    const double dy = std::max({r.min_y - p.y, 0.0, p.y - r.max_y});
    return std::hypot(dx, dy);
}

inline double rect_intersection_area(const Rect& a, const Rect& b) {
    const double w = std::min(a.max_x, b.max_x) - std::max(a.min_x, b.min_x);
    const double h = std::min(a.max_y, b.max_y) - std::max(a.min_y, b.min_y);
    return (w > 0.0 && h > 0.0) ? w * h : 0.0;
}

namespace detail {

inline int orientation(const Point& a, const Point& b, const Point& c) {
    const double v = cross(b - a, c - a);
    return (v > 0.0) - (v < 0.0);
}

inline bool on_segment(const Point& a, const Point& b, const Point& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
           p.y <= std::max(a.y, b.y);
}

}  // namespace detail

/// Closed-segment intersection test, touching counts.
inline bool segments_intersect(const Point& p1, const Point& p2, const Point& q1, const Point& q2) {
    using detail::on_segment;
    using detail::orientation;
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment(q1, q2, p2)) return true;
    return false;
}

/// Parameters (t along p, u along q) of the single crossing point of two
/// non-parallel segments, if it lies on both.
inline std::optional<std::pair<double, double>> segment_crossing(const Point& p1, const Point& p2, const Point& q1,
                                                                 const Point& q2) {
    const Point r = p2 - p1;
    const Point s = q2 - q1;
    const double denom = cross(r, s);
    if (denom == 0.0) return std::nullopt;
    const Point qp = q1 - p1;
    const double t = cross(qp, s) / denom;
    const double u = cross(qp, r) / denom;
    if (t < 0.0 || t > 1.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return std::pair{t, u};
}

/// Liang-Barsky clip of segment a->b against r. Returns the parameter
/// interval [t0, t1] inside r, or nothing when the segment misses r or only
/// touches it in a single point.
inline std::optional<std::pair<double, double>> clip_segment(const Point& a, const Point& b, const Rect& r) {
    const double dx = b.x - a.x;
    const double dy = b.y - a.y;
    double t0 = 0.0;
    double t1 = 1.0;
    const double p[4] = {-dx, dx, -dy, dy};
    const double q[4] = {a.x - r.min_x, r.max_x - a.x, a.y - r.min_y, r.max_y - a.y};
    for (int i = 0; i < 4; ++i) {
        if (p[i] == 0.0) {
            if (q[i] < 0.0) return std::nullopt;
            continue;
        }
        const double t = q[i] / p[i];
        if (p[i] < 0.0) {
            t0 = std::max(t0, t);
        } else {
            t1 = std::min(t1, t);
        }
        if (t0 > t1) return std::nullopt;
    }
    if (!(t1 > t0)) return std::nullopt;
    return std::pair{t0, t1};
}

/// Sutherland-Hodgman clip of a simple polygon against an axis-aligned
/// rectangle. Concave inputs may produce zero-width bridges, which do not
/// change the area.
inline std::vector<Point> clip_polygon(std::span<const Point> ring, const Rect& r) {
    std::vector<Point> out(ring.begin(), ring.end());
    auto clip_edge = [&out](auto inside, auto intersect) {
        if (out.empty()) return;
        std::vector<Point> in;
        in.swap(out);
        const std::size_t n = in.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& cur = in[i];
            const Point& prev = in[(i + n - 1) % n];
            const bool cur_in = inside(cur);
            const bool prev_in = inside(prev);
            if (cur_in) {
                if (!prev_in) out.push_back(intersect(prev, cur));
                out.push_back(cur);
            } else if (prev_in) {
                out.push_back(intersect(prev, cur));
            }
        }
    };
    auto at_x = [](double x) {
        return [x](const Point& a, const Point& b) {
            const double t = (x - a.x) / (b.x - a.x);
            return Point{x, a.y + t * (b.y - a.y)};
        };
    };
    auto at_y = [](double y) {
        return [y](const Point& a, const Point& b) {
            const double t = (y - a.y) / (b.y - a.y);
            return Point{a.x + t * (b.x - a.x), y};
        };
    };
    clip_edge([&](const Point& p) { return p.x >= r.min_x; }, at_x(r.min_x));
    clip_edge([&](const Point& p) { return p.x <= r.max_x; }, at_x(r.max_x));
    clip_edge([&](const Point& p) { return p.y >= r.min_y; }, at_y(r.min_y));
    clip_edge([&](const Point& p) { return p.y <= r.max_y; }, at_y(r.max_y));
    return out;
}

inline double polygon_rect_intersection_area(std::span<const Point> ring, const Rect& r) {
    const auto clipped = clip_polygon(ring, r);
    return area(clipped);
}

inline double polyline_length(std::span<const Point> pts) {
    double len = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) len += distance(pts[i - 1], pts[i]);
    return len;
}

/// A ring is simple when it has >= 3 vertices, positive area, finite
/// coordinates and no two non-adjacent edges touching.
inline bool is_simple_polygon(std::span<const Point> ring) {
    const std::size_t n = ring.size();
    if (n < 3) return false;
    for (const auto& p : ring)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) return false;
    if (!(area(ring) > 0.0)) return false;
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a1 = ring[i];
        const Point& a2 = ring[(i + 1) % n];
        if (a1 == a2) return false;
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool adjacent = (j == i + 1) || (i == 0 && j == n - 1);
            if (adjacent) continue;
            if (segments_intersect(a1, a2, ring[j], ring[(j + 1) % n])) return false;
        }
    }
    return true;
}

}  // namespace gridres::geo
