#pragma once

// Layer ingestion from GeoJSON and CSV files.

#include "gridres/csv.hpp"
#include "gridres/geo/layers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace gridres::geo {

namespace fs = std::filesystem;
using nlohmann::json;

inline json read_json_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw DataError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

namespace detail {

inline std::vector<Point> parse_positions(const json& coords) {
    std::vector<Point> pts;
    pts.reserve(coords.size());
    for (const auto& c : coords) {
        if (!c.is_array() || c.size() < 2) throw DataError("GeoJSON position must have two coordinates");
        pts.push_back({c[0].get<double>(), c[1].get<double>()});
    }
    return pts;
}

/// Outer ring only; a trailing closing vertex is dropped.
inline std::vector<Point> parse_ring(const json& rings) {
    if (!rings.is_array() || rings.empty()) throw DataError("GeoJSON polygon without rings");
    auto ring = parse_positions(rings[0]);
    if (ring.size() > 1 && ring.front() == ring.back()) ring.pop_back();
    return ring;
}

inline const json& features_of(const json& doc, const fs::path& path) {
    if (!doc.contains("features") || !doc["features"].is_array())
        throw DataError("'" + path.string() + "' is not a GeoJSON FeatureCollection");
    return doc["features"];
}

inline std::optional<double> numeric_property(const json& feature, const std::string& name) {
    if (!feature.contains("properties") || !feature["properties"].is_object()) return std::nullopt;
    const auto& props = feature["properties"];
    if (!props.contains(name)) return std::nullopt;
    const auto& v = props[name];
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) {
        try {
            return std::stod(v.get<std::string>());
        } catch (...) {
            return std::nullopt;
        }
    }
    return std::nullopt;
}

}  // namespace detail

/// Polygons (and multipolygon parts) carrying numeric `property`. When
/// `keep_value` is set, only features whose property equals it are loaded
/// (land-cover class filtering).
inline PolygonLayer read_polygon_layer(const fs::path& path, const std::string& property, const std::string& unit_tag,
                                       std::optional<double> keep_value = std::nullopt) {
    const json doc = read_json_file(path);
    PolygonLayer layer;
    std::size_t idx = 0;
    for (const auto& f : detail::features_of(doc, path)) {
        auto value = detail::numeric_property(f, property);
        if (!value)
            throw DataError("'" + path.string() + "' feature " + std::to_string(idx) + " lacks numeric property '" +
                            property + "'");
        ++idx;
        if (keep_value && *value != *keep_value) continue;
        const auto& geom = f.at("geometry");
        const std::string type = geom.at("type").get<std::string>();
        if (type == "Polygon") {
            layer.units.push_back({detail::parse_ring(geom.at("coordinates")), *value, unit_tag});
        } else if (type == "MultiPolygon") {
            for (const auto& poly : geom.at("coordinates"))
                layer.units.push_back({detail::parse_ring(poly), *value, unit_tag});
        } else {
            throw DataError("'" + path.string() + "' contains non-polygon geometry " + type);
        }
    }
    layer.validate();
    return layer;
}

/// Points from CSV (columns x, y plus numeric attributes) or GeoJSON Point
/// features (numeric properties become attributes).
inline PointLayer read_point_layer(const fs::path& path) {
    PointLayer layer;
    if (path.extension() == ".csv") {
        const auto table = read_csv(path);
        const auto xi = table.column("x");
        const auto yi = table.column("y");
        for (const auto& row : table.rows) {
            PointRecord rec;
            rec.location = {parse_double(row[xi], path), parse_double(row[yi], path)};
            for (std::size_t c = 0; c < table.header.size(); ++c) {
                if (c == xi || c == yi) continue;
                double v;
                if (try_parse_double(row[c], v)) rec.attributes[table.header[c]] = v;
            }
            layer.points.push_back(std::move(rec));
        }
    } else {
        const json doc = read_json_file(path);
        for (const auto& f : detail::features_of(doc, path)) {
            const auto& geom = f.at("geometry");
            if (geom.at("type").get<std::string>() != "Point")
                throw DataError("'" + path.string() + "' contains non-point geometry");
            const auto& c = geom.at("coordinates");
            PointRecord rec;
            rec.location = {c.at(0).get<double>(), c.at(1).get<double>()};
            if (f.contains("properties") && f["properties"].is_object()) {
                for (const auto& [k, v] : f["properties"].items())
                    if (v.is_number()) rec.attributes[k] = v.get<double>();
            }
            layer.points.push_back(std::move(rec));
        }
    }
    layer.validate();
    return layer;
}

/// LineString / MultiLineString features with a string `class` property.
/// Segments whose class is outside `classes` are skipped.
inline std::vector<RoadSegment> read_road_segments(const fs::path& path, const std::vector<std::string>& classes) {
    const json doc = read_json_file(path);
    std::vector<RoadSegment> out;
    for (const auto& f : detail::features_of(doc, path)) {
        if (!f.contains("properties") || !f["properties"].contains("class"))
            throw DataError("'" + path.string() + "' road feature without 'class' property");
        const std::string cls = f["properties"]["class"].get<std::string>();
        if (std::find(classes.begin(), classes.end(), cls) == classes.end()) continue;
        const auto& geom = f.at("geometry");
        const std::string type = geom.at("type").get<std::string>();
        auto add = [&](const json& coords) {
            auto seg = RoadSegment::from_polyline(detail::parse_positions(coords), cls);
            validate_segment(seg, classes);
            out.push_back(std::move(seg));
        };
        if (type == "LineString") {
            add(geom.at("coordinates"));
        } else if (type == "MultiLineString") {
            for (const auto& part : geom.at("coordinates")) add(part);
        } else {
            throw DataError("'" + path.string() + "' contains non-line geometry " + type);
        }
    }
    return out;
}

}  // namespace gridres::geo
