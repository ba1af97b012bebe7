#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace gridres::features {

enum class Subsystem { Facility, Transportation, Communication, Society };
enum class Component { Robustness, Redundancy, Resourcefulness };
enum class Direction { Positive, Inverse };

/// How a raw column is mapped so that larger always means more resilient.
enum class Transform {
    Identity,    // positive-direction features
    Reciprocal,  // x -> 1 / (1 + x), inverse-direction features
    Shift,       // x -> x + 1, assortativity [-1, 1] -> [0, 2]
};

inline double apply_transform(Transform t, double x) {
    switch (t) {
        case Transform::Identity: return x;
        case Transform::Reciprocal: return 1.0 / (1.0 + x);
        case Transform::Shift: return x + 1.0;
    }
    return x;
}

inline double invert_transform(Transform t, double y) {
    switch (t) {
        case Transform::Identity: return y;
        case Transform::Reciprocal: return 1.0 / y - 1.0;
        case Transform::Shift: return y - 1.0;
    }
    return y;
}

inline std::string_view transform_name(Transform t) {
    switch (t) {
        case Transform::Identity: return "raw";
        case Transform::Reciprocal: return "reciprocal";
        case Transform::Shift: return "shifted";
    }
    return "raw";
}

struct FeatureSpec {
    std::string_view name;
    Subsystem subsystem;
    Component component;
    Direction direction;
    std::string_view unit;
    Transform transform;
};

inline constexpr std::size_t kFeatureCount = 12;

// Column order of every resilience feature matrix: subsystem rows, component
// columns.
inline constexpr std::array<FeatureSpec, kFeatureCount> kSchema{{
    {"building_age", Subsystem::Facility, Component::Robustness, Direction::Inverse, "years", Transform::Reciprocal},
    {"healthcare_access", Subsystem::Facility, Component::Redundancy, Direction::Positive, "count", Transform::Identity},
    {"greenspace_area", Subsystem::Facility, Component::Resourcefulness, Direction::Positive, "m2", Transform::Identity},
    {"road_assortativity", Subsystem::Transportation, Component::Robustness, Direction::Positive, "1", Transform::Shift},
    {"boundary_roads", Subsystem::Transportation, Component::Redundancy, Direction::Positive, "count", Transform::Identity},
    {"road_density", Subsystem::Transportation, Component::Resourcefulness, Direction::Positive, "m/m2", Transform::Identity},
    {"tower_age", Subsystem::Communication, Component::Robustness, Direction::Inverse, "years", Transform::Reciprocal},
    {"tower_count", Subsystem::Communication, Component::Redundancy, Direction::Positive, "count", Transform::Identity},
    {"internet_speed", Subsystem::Communication, Component::Resourcefulness, Direction::Positive, "Mbps", Transform::Identity},
    {"poverty_rate", Subsystem::Society, Component::Robustness, Direction::Inverse, "fraction", Transform::Reciprocal},
    {"social_connectedness", Subsystem::Society, Component::Redundancy, Direction::Positive, "index", Transform::Identity},
    {"education_level", Subsystem::Society, Component::Resourcefulness, Direction::Positive, "fraction", Transform::Identity},
}};

enum FeatureIndex : std::size_t {
    kBuildingAge = 0,
    kHealthcareAccess,
    kGreenspaceArea,
    kRoadAssortativity,
    kBoundaryRoads,
    kRoadDensity,
    kTowerAge,
    kTowerCount,
    kInternetSpeed,
    kPovertyRate,
    kSocialConnectedness,
    kEducationLevel,
};

inline std::optional<std::size_t> feature_index(std::string_view name) {
    for (std::size_t i = 0; i < kFeatureCount; ++i)
        if (kSchema[i].name == name) return i;
    return std::nullopt;
}

}  // namespace gridres::features
