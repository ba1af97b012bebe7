#pragma once

// Per-cell resilience features and assembly of the resilience feature matrix.

#include "gridres/features/road_network.hpp"
#include "gridres/features/schema.hpp"
#include "gridres/geo/grid.hpp"
#include "gridres/geo/layers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace gridres::features {

using geo::Grid;
using geo::GridCell;
using geo::PointLayer;
using geo::PolygonLayer;

// ---------------------------------------------------------------------------
// Configuration

enum class RoadMetric { Density, Length };

inline std::vector<std::string> default_road_classes() {
    return {"motorway",      "trunk",      "primary",        "secondary",      "tertiary",
            "motorway_link", "trunk_link", "primary_link",   "secondary_link", "tertiary_link"};
}

inline SpeedTable default_speed_table() {
    SpeedTable s{{"motorway", 100.0}, {"trunk", 80.0}, {"primary", 60.0}, {"secondary", 50.0}, {"tertiary", 40.0}};
    for (const auto& parent : std::vector<std::string>{"motorway", "trunk", "primary", "secondary", "tertiary"})
        s[parent + "_link"] = std::max(30.0, s[parent] - 10.0);
    return s;
}

struct FeatureConfig {
    std::vector<std::string> road_classes = default_road_classes();
    SpeedTable speeds_kmh = default_speed_table();
    double access_threshold_minutes = 30.0;
    RoadMetric road_metric = RoadMetric::Density;
    double greenspace_class = 71.0;
};

// ---------------------------------------------------------------------------
// Feature matrix

/// Cells x 12 matrix in schema order, direction aligned so that larger is
/// more resilient. `imputed(i, j) == 1` marks entries filled by the column
/// median because the cell had no data for that feature.
struct ResilienceFeatureMatrix {
    std::vector<int> cell_ids;
    Matrix values;
    Eigen::MatrixXi imputed;
    std::array<Transform, kFeatureCount> transforms{};

    Index rows() const { return values.rows(); }

    static ResilienceFeatureMatrix with_schema_transforms(std::vector<int> ids, Matrix v) {
        ResilienceFeatureMatrix rf;
        rf.cell_ids = std::move(ids);
        rf.imputed = Eigen::MatrixXi::Zero(v.rows(), v.cols());
        rf.values = std::move(v);
        for (std::size_t j = 0; j < kFeatureCount; ++j) rf.transforms[j] = kSchema[j].transform;
        return rf;
    }

    void validate() const {
        if (values.cols() != static_cast<Index>(kFeatureCount))
            throw DataError("feature matrix must have " + std::to_string(kFeatureCount) + " columns");
        if (static_cast<std::size_t>(values.rows()) != cell_ids.size())
            throw DataError("feature matrix row count does not match cell ids");
        if (!values.allFinite()) throw DataError("feature matrix contains NaN or infinite values");
    }

    /// Undo direction alignment for one entry.
    double raw_value(Index row, std::size_t col) const {
        return invert_transform(transforms[col], values(row, static_cast<Index>(col)));
    }
};

// ---------------------------------------------------------------------------
// Per-cell operations

namespace detail {

/// Order-independent sum: values are added smallest first.
inline double stable_sum(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace detail

/// Unweighted mean of the values of every unit overlapping the cell.
/// Nothing when no unit overlaps.
inline std::optional<double> areal_mean(const GridCell& cell, const PolygonLayer& layer) {
    const auto hits = geo::intersecting_units(cell, layer);
    if (hits.empty()) return std::nullopt;
    std::vector<double> vals;
    vals.reserve(hits.size());
    for (const auto& h : hits) {
        const double v = layer.units[h.unit].value;
        if (!std::isfinite(v)) throw DataError("areal_mean: non-finite unit value");
        vals.push_back(v);
    }
    return detail::stable_sum(std::move(vals)) / static_cast<double>(hits.size());
}

struct TowerStats {
    int count = 0;
    std::optional<double> mean_age;
};

/// Towers whose service circle (attribute `range`, meters) reaches the cell,
/// and their mean `age`.
inline TowerStats service_circle_stats(const GridCell& cell, const PointLayer& towers) {
    std::vector<double> ages;
    for (std::size_t i = 0; i < towers.points.size(); ++i) {
        const auto& t = towers.points[i];
        const auto range = t.attribute("range");
        const auto age = t.attribute("age");
        if (!range || !age) throw DataError("tower " + std::to_string(i) + " lacks 'age' or 'range'");
        if (*range < 0.0) throw DataError("tower " + std::to_string(i) + " has negative service range");
        if (geo::circle_intersects_cell(t.location, *range, cell)) ages.push_back(*age);
    }
    TowerStats s;
    s.count = static_cast<int>(ages.size());
    if (!ages.empty()) s.mean_age = detail::stable_sum(ages) / static_cast<double>(ages.size());
    return s;
}

/// Facilities reachable within `threshold` minutes (inclusive). `times` is
/// the cell's row of the travel-time matrix.
inline int healthcare_access_count(const Eigen::Ref<const Vector>& times, double threshold = 30.0) {
    int n = 0;
    for (Index j = 0; j < times.size(); ++j)
        if (times[j] <= threshold) ++n;
    return n;
}

/// Number of distinct segments touching or crossing the cell's boundary.
inline int boundary_road_count(const GridCell& cell, const std::vector<geo::RoadSegment>& segments) {
    int n = 0;
    for (const auto& s : segments)
        if (geo::bounding_box(s.polyline).overlaps(cell.square) && geo::crosses_boundary(s, cell)) ++n;
    return n;
}

/// Overlap area of the (pre-filtered) land-cover pixels with the cell.
inline double greenspace_area(const GridCell& cell, const PolygonLayer& pixels) {
    std::vector<double> areas;
    for (const auto& h : geo::intersecting_units(cell, pixels)) areas.push_back(h.area);
    return detail::stable_sum(std::move(areas));
}

inline double road_length_in_cell(const GridCell& cell, const std::vector<geo::RoadSegment>& segments) {
    std::vector<double> lengths;
    for (const auto& piece : geo::clip_segments_to_cell(segments, cell)) lengths.push_back(piece.length);
    return detail::stable_sum(std::move(lengths));
}

/// Clipped in-cell road length per square meter of cell.
inline double road_density(const GridCell& cell, const std::vector<geo::RoadSegment>& segments) {
    const double a = cell.square.area();
    if (!(a > 0.0)) throw DataError("road_density: cell area must be positive");
    return road_length_in_cell(cell, segments) / a;
}

/// Assortativity of the road network built from the segments clipped to the
/// cell.
inline std::optional<double> cell_assortativity(const GridCell& cell, const std::vector<geo::RoadSegment>& segments,
                                                const std::vector<std::string>& classes) {
    return assortativity_coefficient(build_road_graph(geo::clip_segments_to_cell(segments, cell), classes));
}

// ---------------------------------------------------------------------------
// Direction alignment

/// Map raw values (NaN = no data) to the aligned matrix: no-data entries
/// take the median of the cells that have data, then each column gets its
/// schema transform.
inline ResilienceFeatureMatrix align_directions(const Matrix& raw, std::vector<int> cell_ids) {
    if (raw.cols() != static_cast<Index>(kFeatureCount))
        throw DataError("align_directions: expected " + std::to_string(kFeatureCount) + " columns");
    if (static_cast<std::size_t>(raw.rows()) != cell_ids.size())
        throw DataError("align_directions: row count does not match cell ids");
    auto rf = ResilienceFeatureMatrix::with_schema_transforms(std::move(cell_ids), raw);
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        const Index c = static_cast<Index>(j);
        std::vector<double> present;
        for (Index i = 0; i < raw.rows(); ++i) {
            const double v = raw(i, c);
            if (std::isnan(v)) continue;
            if (!std::isfinite(v)) throw DataError("feature '" + std::string(kSchema[j].name) + "' has an infinite value");
            present.push_back(v);
        }
        if (present.empty() && raw.rows() > 0)
            throw DataError("feature '" + std::string(kSchema[j].name) + "' has no data in any cell");
        double median = 0.0;
        if (!present.empty()) {
            std::sort(present.begin(), present.end());
            const std::size_t h = present.size() / 2;
            median = present.size() % 2 ? present[h] : (present[h - 1] + present[h]) / 2.0;
        }
        for (Index i = 0; i < raw.rows(); ++i) {
            double v = raw(i, c);
            if (std::isnan(v)) {
                v = median;
                rf.imputed(i, c) = 1;
            }
            if (kSchema[j].transform == Transform::Reciprocal && v < 0.0)
                throw DataError("feature '" + std::string(kSchema[j].name) + "' has a negative value " +
                                std::to_string(v) + "; the reciprocal transform needs x >= 0");
            rf.values(i, c) = apply_transform(kSchema[j].transform, v);
        }
    }
    return rf;
}

// ---------------------------------------------------------------------------
// Assembly

struct FeatureInputs {
    PolygonLayer building_age;
    PolygonLayer poverty_rate;
    PolygonLayer education_level;
    PolygonLayer social_connectedness;
    PolygonLayer internet_speed;
    PolygonLayer greenspace;  // land-cover pixels already filtered to the greenspace class
    PointLayer towers;        // attributes: age, range
    PointLayer healthcare;
    std::vector<geo::RoadSegment> roads;
};

/// Raw per-cell values in schema order; NaN marks no data.
inline Matrix compute_raw_features(const Grid& grid, const std::vector<int>& cell_ids, const FeatureInputs& in,
                                   const FeatureConfig& cfg) {
    const auto nan = std::numeric_limits<double>::quiet_NaN();
    Matrix raw(static_cast<Index>(cell_ids.size()), static_cast<Index>(kFeatureCount));

    std::vector<geo::RoadSegment> roads;
    for (const auto& s : in.roads)
        if (std::find(cfg.road_classes.begin(), cfg.road_classes.end(), s.road_class) != cfg.road_classes.end())
            roads.push_back(s);

    const RoadNetwork network = build_road_graph(roads, cfg.road_classes);
    std::vector<geo::Point> origins;
    for (int id : cell_ids) origins.push_back(grid.cells.at(static_cast<std::size_t>(id)).centroid());
    std::vector<geo::Point> facilities;
    for (const auto& p : in.healthcare.points) facilities.push_back(p.location);
    const Matrix tt = travel_time_matrix(network, origins, facilities, cfg.speeds_kmh);

    for (std::size_t r = 0; r < cell_ids.size(); ++r) {
        const auto& cell = grid.cells.at(static_cast<std::size_t>(cell_ids[r]));
        const Index i = static_cast<Index>(r);
        auto opt = [nan](std::optional<double> v) { return v ? *v : nan; };
        raw(i, kBuildingAge) = opt(areal_mean(cell, in.building_age));
        raw(i, kHealthcareAccess) = healthcare_access_count(tt.row(i).transpose(), cfg.access_threshold_minutes);
        raw(i, kGreenspaceArea) = greenspace_area(cell, in.greenspace);
        raw(i, kRoadAssortativity) = opt(cell_assortativity(cell, roads, cfg.road_classes));
        raw(i, kBoundaryRoads) = boundary_road_count(cell, roads);
        raw(i, kRoadDensity) = cfg.road_metric == RoadMetric::Density ? road_density(cell, roads)
                                                                      : road_length_in_cell(cell, roads);
        const auto towers = service_circle_stats(cell, in.towers);
        raw(i, kTowerAge) = opt(towers.mean_age);
        raw(i, kTowerCount) = towers.count;
        raw(i, kInternetSpeed) = opt(areal_mean(cell, in.internet_speed));
        raw(i, kPovertyRate) = opt(areal_mean(cell, in.poverty_rate));
        raw(i, kSocialConnectedness) = opt(areal_mean(cell, in.social_connectedness));
        raw(i, kEducationLevel) = opt(areal_mean(cell, in.education_level));
    }
    return raw;
}

/// Full feature matrix for the given cells (all grid cells when empty).
inline ResilienceFeatureMatrix assemble_rf(const Grid& grid, const FeatureInputs& in, const FeatureConfig& cfg,
                                           std::vector<int> cell_ids = {}) {
    if (cell_ids.empty()) {
        for (const auto& c : grid.cells) cell_ids.push_back(c.id);
    }
    const Matrix raw = compute_raw_features(grid, cell_ids, in, cfg);
    return align_directions(raw, std::move(cell_ids));
}

}  // namespace gridres::features
