#pragma once

// Raw geospatial layers and their joins against grid cells.

#include "gridres/geo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gridres::geo {

struct PolygonUnit {
    std::vector<Point> ring;
    double value = 0.0;
    std::string unit;  // e.g. "tract", "block_group", "zip", "pixel"
};

struct PolygonLayer {
    std::vector<PolygonUnit> units;

    void validate() const {
        for (std::size_t i = 0; i < units.size(); ++i) {
            if (!std::isfinite(units[i].value))
                throw DataError("polygon unit " + std::to_string(i) + " has a non-finite value");
            if (!is_simple_polygon(units[i].ring))
                throw DataError("polygon unit " + std::to_string(i) + " is not a simple polygon");
        }
    }
};

struct PointRecord {
    Point location;
    std::map<std::string, double> attributes;

    std::optional<double> attribute(const std::string& key) const {
        auto it = attributes.find(key);
        if (it == attributes.end()) return std::nullopt;
        return it->second;
    }
};

struct PointLayer {
    std::vector<PointRecord> points;

    void validate() const {
        for (std::size_t i = 0; i < points.size(); ++i) {
            const auto& p = points[i];
            if (!std::isfinite(p.location.x) || !std::isfinite(p.location.y))
                throw DataError("point " + std::to_string(i) + " has non-finite coordinates");
            if (auto r = p.attribute("range"); r && *r < 0.0)
                throw DataError("point " + std::to_string(i) + " has negative service range");
        }
    }
};

struct RoadSegment {
    std::vector<Point> polyline;
    std::string road_class;
    double length = 0.0;

    static RoadSegment from_polyline(std::vector<Point> pts, std::string cls) {
        RoadSegment s{std::move(pts), std::move(cls), 0.0};
        s.length = polyline_length(s.polyline);
        return s;
    }
};

inline void validate_segment(const RoadSegment& s, const std::vector<std::string>& classes) {
    if (s.polyline.size() < 2) throw DataError("road segment needs at least two points");
    const double arc = polyline_length(s.polyline);
    if (!(s.length > 0.0)) throw DataError("road segment has non-positive length");
    if (std::abs(arc - s.length) > 1e-6 * s.length)
        throw DataError("road segment length " + std::to_string(s.length) + " disagrees with arc length " +
                        std::to_string(arc));
    if (!classes.empty() && std::find(classes.begin(), classes.end(), s.road_class) == classes.end())
        throw DataError("road class '" + s.road_class + "' is not configured");
}

struct UnitHit {
    std::size_t unit = 0;
    double area = 0.0;
};

/// Units whose polygon overlaps the cell square with positive area.
inline std::vector<UnitHit> intersecting_units(const GridCell& cell, const PolygonLayer& layer) {
    std::vector<UnitHit> hits;
    const double tol = 1e-12 * cell.square.area();
    for (std::size_t i = 0; i < layer.units.size(); ++i) {
        const auto& ring = layer.units[i].ring;
        if (!is_simple_polygon(ring)) throw DataError("intersecting_units: polygon " + std::to_string(i) + " is invalid");
        if (!bounding_box(ring).overlaps(cell.square)) continue;
        const double a = polygon_rect_intersection_area(ring, cell.square);
        if (a > tol) hits.push_back({i, std::min(a, cell.square.area())});
    }
    return hits;
}

inline bool circle_intersects_cell(const Point& center, double radius, const GridCell& cell) {
    return rect_distance(center, cell.square) <= radius;
}

/// Pieces of each segment that lie inside the cell. Consecutive clipped
/// sub-edges are chained, so a polyline that leaves and re-enters yields
/// several pieces.
inline std::vector<RoadSegment> clip_segments_to_cell(const std::vector<RoadSegment>& segments, const GridCell& cell) {
    std::vector<RoadSegment> out;
    const Rect& r = cell.square;
    for (const auto& seg : segments) {
        if (!bounding_box(seg.polyline).overlaps(r)) continue;
        bool fully_inside = std::all_of(seg.polyline.begin(), seg.polyline.end(),
                                        [&](const Point& p) { return r.contains(p); });
        if (fully_inside) {
            out.push_back(seg);
            continue;
        }
        std::vector<Point> current;
        auto flush = [&] {
            if (current.size() >= 2) {
                auto piece = RoadSegment::from_polyline(std::move(current), seg.road_class);
                if (piece.length > 0.0) out.push_back(std::move(piece));
            }
            current.clear();
        };
        for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
            const Point& a = seg.polyline[i - 1];
            const Point& b = seg.polyline[i];
            auto t = clip_segment(a, b, r);
            if (!t) {
                flush();
                continue;
            }
            const Point p0 = t->first == 0.0 ? a : a + (b - a) * t->first;
            const Point p1 = t->second == 1.0 ? b : a + (b - a) * t->second;
            if (current.empty() || !(current.back() == p0) || t->first > 0.0) {
                flush();
                current.push_back(p0);
            }
            current.push_back(p1);
            if (t->second < 1.0) flush();
        }
        flush();
    }
    return out;
}

/// True when the polyline touches or crosses the boundary ring of the cell.
inline bool crosses_boundary(const RoadSegment& seg, const GridCell& cell) {
    const auto ring = cell.square.ring();
    for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
        for (std::size_t k = 0; k < 4; ++k) {
            if (segments_intersect(seg.polyline[i - 1], seg.polyline[i], ring[k], ring[(k + 1) % 4])) return true;
        }
    }
    return false;
}

}  // namespace gridres::geo
