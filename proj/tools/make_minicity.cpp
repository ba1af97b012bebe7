// Writes the synthetic 20 km x 20 km mini-city used by the end-to-end tests:
// areal census-style layers, land cover, towers, hospitals, roads, a flood
// risk table and a run configuration.
//
//   make_minicity <output-dir> [seed]

#include "gridres/common.hpp"
#include "gridres/csv.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <string>

namespace {

using nlohmann::json;
using gridres::Rng;
using gridres::uniform01;

constexpr double kSide = 20000.0;
constexpr double kCx = 10000.0;
constexpr double kCy = 10000.0;

double radial(double x, double y) { return std::hypot(x - kCx, y - kCy) / std::hypot(kCx, kCy); }

json square(double x0, double y0, double size) {
    return json{{"type", "Polygon"},
                {"coordinates",
                 json::array({json::array({json::array({x0, y0}), json::array({x0 + size, y0}),
                                           json::array({x0 + size, y0 + size}), json::array({x0, y0 + size}),
                                           json::array({x0, y0})})})}};
}

json feature(json geometry, json props) {
    return json{{"type", "Feature"}, {"geometry", std::move(geometry)}, {"properties", std::move(props)}};
}

json collection() { return json{{"type", "FeatureCollection"}, {"features", json::array()}}; }

double round_to(double v, double step) { return std::round(v / step) * step; }

// Districts: a dense old core, an affluent north-east, a poor south-west
// industrial belt, a green north-west and suburban fringe.
int district(double x, double y) {
    if (radial(x, y) < 0.28) return 0;
    if (x >= kCx && y >= kCy) return 1;
    if (x < kCx && y < kCy) return 2;
    if (x < kCx && y >= kCy) return 3;
    return 4;
}

struct Profile {
    double building_age, poverty, education, social, internet;
};

constexpr Profile kProfiles[5] = {
    {68, 0.24, 0.38, 0.55, 120},  // core
    {22, 0.05, 0.72, 0.80, 310},  // affluent
    {55, 0.34, 0.18, 0.30, 60},   // industrial
    {35, 0.12, 0.55, 0.65, 180},  // green
    {28, 0.15, 0.45, 0.45, 140},  // fringe
};

void write_areal(const std::filesystem::path& dir, Rng& rng) {
    // Tracts: 5 km squares carrying age, poverty and education.
    json tracts = collection();
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) {
            const double x0 = c * 5000.0, y0 = r * 5000.0;
            const auto& p = kProfiles[district(x0 + 2500, y0 + 2500)];
            tracts["features"].push_back(feature(
                square(x0, y0, 5000.0),
                {{"tract", r * 4 + c},
                 {"building_age", round_to(p.building_age * (0.9 + 0.2 * uniform01(rng)), 0.1)},
                 {"poverty_rate", round_to(p.poverty * (0.9 + 0.2 * uniform01(rng)), 0.001)},
                 {"education_level", round_to(p.education * (0.9 + 0.2 * uniform01(rng)), 0.001)}}));
        }
    gridres::write_text_file(dir / "tracts.geojson", tracts.dump(1) + "\n");

    // Block groups: 2.5 km squares carrying internet speed.
    json bg = collection();
    for (int r = 0; r < 8; ++r)
        for (int c = 0; c < 8; ++c) {
            const double x0 = c * 2500.0, y0 = r * 2500.0;
            const auto& p = kProfiles[district(x0 + 1250, y0 + 1250)];
            bg["features"].push_back(feature(
                square(x0, y0, 2500.0),
                {{"block_group", r * 8 + c}, {"internet_speed", round_to(p.internet * (0.85 + 0.3 * uniform01(rng)), 0.1)}}));
        }
    gridres::write_text_file(dir / "block_groups.geojson", bg.dump(1) + "\n");

    // ZIP areas: 4 km squares carrying the social connectedness index.
    json zips = collection();
    for (int r = 0; r < 5; ++r)
        for (int c = 0; c < 5; ++c) {
            const double x0 = c * 4000.0, y0 = r * 4000.0;
            const auto& p = kProfiles[district(x0 + 2000, y0 + 2000)];
            zips["features"].push_back(feature(
                square(x0, y0, 4000.0),
                {{"zip", 90000 + r * 5 + c}, {"social_connectedness", round_to(p.social * (0.9 + 0.2 * uniform01(rng)), 0.001)}}));
        }
    gridres::write_text_file(dir / "zips.geojson", zips.dump(1) + "\n");
}

void write_landcover(const std::filesystem::path& dir, Rng& rng) {
    // 1 km pixels; class 71 is grassland/greenspace, 22-24 developed, 41 forest.
    json lc = collection();
    for (int r = 0; r < 20; ++r)
        for (int c = 0; c < 20; ++c) {
            const double x = c * 1000.0 + 500, y = r * 1000.0 + 500;
            const int d = district(x, y);
            const double green_p = d == 3 ? 0.55 : d == 1 ? 0.3 : d == 4 ? 0.25 : d == 0 ? 0.05 : 0.08;
            int cls = uniform01(rng) < green_p ? 71 : (d == 0 || d == 2 ? 24 : (uniform01(rng) < 0.5 ? 22 : 41));
            lc["features"].push_back(feature(square(c * 1000.0, r * 1000.0, 1000.0), {{"class", cls}}));
        }
    gridres::write_text_file(dir / "landcover.geojson", lc.dump(1) + "\n");
}

void write_points(const std::filesystem::path& dir, Rng& rng) {
    std::string towers = "x,y,age,range\n";
    for (int i = 0; i < 90; ++i) {
        // Denser near the core: radius drawn with a bias towards 0.
        const double u = uniform01(rng);
        const double rad = 13000.0 * u * u;
        const double ang = 6.283185307179586 * uniform01(rng);
        const double x = std::clamp(kCx + rad * std::cos(ang), 50.0, kSide - 50.0);
        const double y = std::clamp(kCy + rad * std::sin(ang), 50.0, kSide - 50.0);
        const int d = district(x, y);
        const double age = d == 2 ? 12 + 6 * uniform01(rng) : d == 1 ? 2 + 5 * uniform01(rng) : 5 + 8 * uniform01(rng);
        const double range = d == 0 ? 800 : 1500 + 1000 * uniform01(rng);
        towers += gridres::format_double(round_to(x, 1)) + "," + gridres::format_double(round_to(y, 1)) + "," +
                  gridres::format_double(round_to(age, 0.1)) + "," + gridres::format_double(round_to(range, 10)) + "\n";
    }
    gridres::write_text_file(dir / "towers.csv", towers);

    std::string hosp = "x,y,beds\n";
    const double sites[][3] = {{9800, 10300, 450}, {11200, 9100, 220}, {14800, 15200, 300}, {15900, 12600, 120},
                               {5200, 14600, 160}, {4100, 4300, 90},   {16500, 4700, 140}};
    for (const auto& s : sites)
        hosp += gridres::format_double(s[0]) + "," + gridres::format_double(s[1]) + "," + gridres::format_double(s[2]) + "\n";
    gridres::write_text_file(dir / "hospitals.csv", hosp);
}

void write_roads(const std::filesystem::path& dir, Rng& rng) {
    json roads = collection();
    auto line = [&](std::vector<std::array<double, 2>> pts, const std::string& cls) {
        json coords = json::array();
        for (const auto& p : pts) coords.push_back(json::array({p[0], p[1]}));
        roads["features"].push_back(feature(json{{"type", "LineString"}, {"coordinates", coords}}, {{"class", cls}}));
    };
    // Ring motorway and two radial trunks.
    line({{3000, 3000}, {17000, 3000}, {17000, 17000}, {3000, 17000}, {3000, 3000}}, "motorway");
    line({{0, 10100}, {20000, 10100}}, "trunk");
    line({{10100, 0}, {10100, 20000}}, "trunk");
    // Primary avenues every 4 km, offset from cell edges.
    for (double v = 2300; v < kSide; v += 4000) {
        line({{v, 0}, {v, 20000}}, "primary");
        line({{0, v}, {20000, v}}, "primary");
    }
    // Secondary and tertiary streets; denser in the core and the affluent
    // district, broken up in the industrial belt.
    for (double v = 700; v < kSide; v += 1000) {
        for (double s = 0; s < kSide; s += 2000) {
            const int d1 = district(v, s + 1000), d2 = district(s + 1000, v);
            const double keep1 = d1 == 0 ? 0.95 : d1 == 1 ? 0.8 : d1 == 2 ? 0.3 : 0.5;
            const double keep2 = d2 == 0 ? 0.95 : d2 == 1 ? 0.8 : d2 == 2 ? 0.3 : 0.5;
            const std::string cls1 = d1 == 0 ? "secondary" : "tertiary";
            const std::string cls2 = d2 == 0 ? "secondary" : "tertiary";
            if (uniform01(rng) < keep1) line({{v, s}, {v, s + 2000}}, cls1);
            if (uniform01(rng) < keep2) line({{s, v}, {s + 2000, v}}, cls2);
        }
    }
    // Link ramps and a few residential streets (filtered out by class).
    line({{2900, 10100}, {3000, 9700}}, "motorway_link");
    line({{17000, 10400}, {17100, 10100}}, "motorway_link");
    line({{500, 500}, {1500, 1500}}, "residential");
    gridres::write_text_file(dir / "roads.geojson", roads.dump(1) + "\n");
}

void write_risk(const std::filesystem::path& dir) {
    // River along the south-west to north-east diagonal; risk decays with
    // distance from it and is raised in low-lying southern rows.
    std::string csv = "cell_id,risk_level\n";
    for (int r = 0; r < 10; ++r)
        for (int c = 0; c < 10; ++c) {
            const double dist = std::abs(r - c) / std::sqrt(2.0);
            int level = 6 - static_cast<int>(std::floor(dist * 1.4));
            if (r <= 2) level += 1;
            level = std::clamp(level, 1, 6);
            csv += std::to_string(r * 10 + c) + "," + std::to_string(level) + "\n";
        }
    gridres::write_text_file(dir / "flood_risk.csv", csv);
}

void write_config(const std::filesystem::path& dir, std::uint64_t seed) {
    json cfg = {
        {"seed", seed},
        {"output_dir", "out"},
        {"grid", {{"bbox", {0, 0, kSide, kSide}}, {"cell_size", 2000}}},
        {"layers",
         {{"building_age", {{"path", "tracts.geojson"}, {"property", "building_age"}, {"unit", "tract"}}},
          {"poverty_rate", {{"path", "tracts.geojson"}, {"property", "poverty_rate"}, {"unit", "tract"}}},
          {"education_level", {{"path", "tracts.geojson"}, {"property", "education_level"}, {"unit", "tract"}}},
          {"social_connectedness", {{"path", "zips.geojson"}, {"property", "social_connectedness"}, {"unit", "zip"}}},
          {"internet_speed", {{"path", "block_groups.geojson"}, {"property", "internet_speed"}, {"unit", "block_group"}}},
          {"greenspace", {{"path", "landcover.geojson"}, {"property", "class"}}},
          {"towers", "towers.csv"},
          {"healthcare", "hospitals.csv"},
          {"roads", "roads.geojson"},
          {"risk", "flood_risk.csv"}}},
        {"features", {{"road_metric", "density"}, {"access_threshold_minutes", 30}, {"greenspace_class", 71}}},
        {"sdae",
         {{"hidden", {500, 500, 2000}},
          {"embedding_dim", 10},
          {"learning_rate", 0.1},
          {"batch_size", 256},
          {"epochs", 200},
          {"finetune_epochs", 200},
          {"dropout", 0.2},
          {"loss", "per_element"}}},
        {"dec",
         {{"k", 5},
          {"max_iterations", 2000},
          {"stop_tolerance", 0.001},
          {"learning_rate", 0.01},
          {"batch_size", 256}}},
        {"forest", {{"n_trees", 200}, {"holdout_fraction", 0.2}}},
        {"grid_search", {{"enabled", false}, {"embedding_dims", {10, 12, 24, 36}}, {"k", {4, 5, 6, 7}}}},
        {"moran", {{"permutations", 999}}},
        {"scenario", {{"selector", {1}}, {"multipliers", {{"healthcare_access", 1.2}, {"road_density", 1.2}}}}},
    };
    gridres::write_text_file(dir / "config.json", cfg.dump(2) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: make_minicity <output-dir> [seed]\n";
        return 2;
    }
    const std::filesystem::path dir = argv[1];
    const std::uint64_t seed = argc > 2 ? std::stoull(argv[2]) : 20240611ULL;
    std::filesystem::create_directories(dir);
    auto rng = gridres::make_rng(seed, "minicity");
    write_areal(dir, rng);
    write_landcover(dir, rng);
    write_points(dir, rng);
    write_roads(dir, rng);
    write_risk(dir);
    write_config(dir, seed);
    std::cout << "mini-city written to " << dir.string() << '\n';
    return 0;
}
