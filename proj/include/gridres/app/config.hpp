#pragma once

// Run configuration: one JSON file with an explicit seed. Relative paths
// resolve against the file's directory.

#include "gridres/features/features.hpp"
#include "gridres/geo/io.hpp"
#include "gridres/rating/pipeline.hpp"
#include "gridres/spatial/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace gridres::app {

namespace fs = std::filesystem;
using nlohmann::json;

struct PolygonSource {
    fs::path path;
    std::string property;
    std::string unit = "unit";
};

struct AppConfig {
    fs::path config_path;
    std::uint64_t seed = 0;
    fs::path output_dir;

    geo::Rect bbox;
    double cell_size = 2000.0;

    // building_age, poverty_rate, education_level, social_connectedness,
    // internet_speed
    std::map<std::string, PolygonSource> areal;
    PolygonSource greenspace;
    fs::path towers;
    fs::path healthcare;
    fs::path roads;
    std::optional<fs::path> risk;

    features::FeatureConfig features;
    rating::PipelineConfig pipeline;
    int moran_permutations = 999;
    spatial::ScenarioSpec scenario;

    json document;  // as loaded, after command-line overrides
};

struct Overrides {
    std::optional<fs::path> output_dir;
    std::optional<std::uint64_t> seed;
    bool grid_search = false;
};

inline const std::array<std::string, 5>& areal_layer_names() {
    static const std::array<std::string, 5> names{"building_age", "poverty_rate", "education_level",
                                                  "social_connectedness", "internet_speed"};
    return names;
}

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback, const std::string& ctx) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(ctx + "." + key + ": " + e.what());
    }
}

inline const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    if (!root.at(key).is_object()) throw ConfigError(std::string("config section '") + key + "' must be an object");
    return root.at(key);
}

inline fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

inline fs::path require_path(const json& layers, const std::string& name, const fs::path& base) {
    if (!layers.contains(name)) throw ConfigError("config: layers." + name + " is required");
    const auto& v = layers.at(name);
    const std::string rel = v.is_string() ? v.get<std::string>() : get_or<std::string>(v, "path", "", "layers." + name);
    if (rel.empty()) throw ConfigError("config: layers." + name + " has no path");
    const fs::path p = resolve(base, rel);
    if (!fs::exists(p)) throw DataError("input layer '" + name + "' not found: " + p.string());
    return p;
}

}  // namespace detail

/// Parses and validates a config document. `origin` is the file it came
/// from and anchors relative paths.
inline AppConfig parse_config(json doc, const fs::path& origin, const Overrides& ov = {}) {
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    AppConfig c;
    c.config_path = origin;
    const fs::path base = origin.has_parent_path() ? origin.parent_path() : fs::path(".");

    if (ov.seed) doc["seed"] = *ov.seed;
    if (!doc.contains("seed")) throw ConfigError("config: 'seed' is required");
    if (!doc["seed"].is_number_unsigned() && !doc["seed"].is_number_integer())
        throw ConfigError("config: 'seed' must be a non-negative integer");
    if (doc["seed"].is_number_integer() && doc["seed"].get<long long>() < 0)
        throw ConfigError("config: 'seed' must be a non-negative integer");
    c.seed = doc["seed"].get<std::uint64_t>();

    if (ov.output_dir) {
        c.output_dir = *ov.output_dir;
    } else if (const char* env = std::getenv("GRIDRES_OUT"); env && *env) {
        c.output_dir = env;
    } else {
        c.output_dir = detail::resolve(base, detail::get_or<std::string>(doc, "output_dir", "out", "config"));
    }

    const json& grid = detail::section(doc, "grid");
    const auto bbox = detail::get_or<std::vector<double>>(grid, "bbox", {}, "grid");
    if (bbox.size() != 4) throw ConfigError("config: grid.bbox must be [min_x, min_y, max_x, max_y]");
    c.bbox = geo::Rect{bbox[0], bbox[1], bbox[2], bbox[3]};
    c.cell_size = detail::get_or<double>(grid, "cell_size", 2000.0, "grid");
    if (!(c.cell_size > 0.0)) throw ConfigError("config: grid.cell_size must be > 0");
    if (!(c.bbox.max_x > c.bbox.min_x && c.bbox.max_y > c.bbox.min_y))
        throw ConfigError("config: grid.bbox is empty");

    const json& layers = detail::section(doc, "layers");
    for (const auto& name : areal_layer_names()) {
        PolygonSource s;
        s.path = detail::require_path(layers, name, base);
        s.property = layers.at(name).is_object() ? detail::get_or<std::string>(layers.at(name), "property", name, "layers." + name)
                                                 : name;
        s.unit = layers.at(name).is_object() ? detail::get_or<std::string>(layers.at(name), "unit", "unit", "layers." + name)
                                             : "unit";
        c.areal.emplace(name, s);
    }
    c.greenspace.path = detail::require_path(layers, "greenspace", base);
    c.greenspace.property = layers.at("greenspace").is_object()
                                ? detail::get_or<std::string>(layers.at("greenspace"), "property", "class", "layers.greenspace")
                                : "class";
    c.greenspace.unit = "pixel";
    c.towers = detail::require_path(layers, "towers", base);
    c.healthcare = detail::require_path(layers, "healthcare", base);
    c.roads = detail::require_path(layers, "roads", base);
    if (layers.contains("risk")) c.risk = detail::require_path(layers, "risk", base);

    const json& f = detail::section(doc, "features");
    c.features.access_threshold_minutes = detail::get_or<double>(f, "access_threshold_minutes", 30.0, "features");
    c.features.greenspace_class = detail::get_or<double>(f, "greenspace_class", 71.0, "features");
    const auto metric = detail::get_or<std::string>(f, "road_metric", "density", "features");
    if (metric == "density")
        c.features.road_metric = features::RoadMetric::Density;
    else if (metric == "length")
        c.features.road_metric = features::RoadMetric::Length;
    else
        throw ConfigError("config: features.road_metric must be 'density' or 'length'");
    c.features.road_classes = detail::get_or(f, "road_classes", features::default_road_classes(), "features");
    if (f.contains("speeds_kmh")) {
        for (const auto& [cls, v] : f.at("speeds_kmh").items()) {
            if (!v.is_number() || !(v.get<double>() > 0.0)) throw ConfigError("config: speed for '" + cls + "' must be > 0");
            c.features.speeds_kmh[cls] = v.get<double>();
        }
    }
    for (const auto& cls : c.features.road_classes)
        if (!c.features.speeds_kmh.count(cls)) throw ConfigError("config: no speed configured for road class '" + cls + "'");
    if (!(c.features.access_threshold_minutes > 0.0)) throw ConfigError("config: access_threshold_minutes must be > 0");

    auto& p = c.pipeline;
    p.seed = c.seed;
    const json& s = detail::section(doc, "sdae");
    p.sdae.hidden = detail::get_or(s, "hidden", p.sdae.hidden, "sdae");
    p.sdae.embedding_dim = detail::get_or<Index>(s, "embedding_dim", 10, "sdae");
    p.sdae.finetune_epochs = detail::get_or(s, "finetune_epochs", 200, "sdae");
    p.sdae.train.learning_rate = detail::get_or(s, "learning_rate", 0.1, "sdae");
    p.sdae.train.batch_size = detail::get_or<Index>(s, "batch_size", 256, "sdae");
    p.sdae.train.epochs = detail::get_or(s, "epochs", 200, "sdae");
    p.sdae.train.dropout_rate = detail::get_or(s, "dropout", 0.2, "sdae");
    p.sdae.train.momentum = detail::get_or(s, "momentum", 0.0, "sdae");
    const auto loss = detail::get_or<std::string>(s, "loss", "per_element", "sdae");
    if (loss == "per_element")
        p.sdae.train.loss = sdae::ReconstructionLoss::PerElement;
    else if (loss == "squared_norm")
        p.sdae.train.loss = sdae::ReconstructionLoss::SquaredNorm;
    else
        throw ConfigError("config: sdae.loss must be 'per_element' or 'squared_norm'");
    if (p.sdae.embedding_dim < 1) throw ConfigError("config: sdae.embedding_dim must be >= 1");
    for (Index h : p.sdae.hidden)
        if (h < 1) throw ConfigError("config: sdae.hidden sizes must be >= 1");
    if (p.sdae.finetune_epochs < 0) throw ConfigError("config: sdae.finetune_epochs must be >= 0");

    const json& d = detail::section(doc, "dec");
    p.dec.k = detail::get_or(d, "k", 5, "dec");
    p.dec.max_iterations = detail::get_or(d, "max_iterations", 2000, "dec");
    p.dec.target_update_interval = detail::get_or(d, "target_update_interval", 0, "dec");
    p.dec.stop_tolerance = detail::get_or(d, "stop_tolerance", 0.001, "dec");
    p.dec.learning_rate = detail::get_or(d, "learning_rate", 0.01, "dec");
    p.dec.batch_size = detail::get_or<Index>(d, "batch_size", 256, "dec");
    p.dec.alpha = detail::get_or(d, "alpha", 1.0, "dec");
    p.dec.kmeans_restarts = detail::get_or(d, "kmeans_restarts", 10, "dec");

    const json& fo = detail::section(doc, "forest");
    p.forest.n_trees = detail::get_or(fo, "n_trees", 200, "forest");
    p.forest.max_features = detail::get_or(fo, "max_features", 0, "forest");
    p.forest.min_samples_leaf = detail::get_or(fo, "min_samples_leaf", 1, "forest");
    p.forest.max_depth = detail::get_or(fo, "max_depth", 0, "forest");
    p.forest.bootstrap = detail::get_or(fo, "bootstrap", true, "forest");
    p.holdout_fraction = detail::get_or(fo, "holdout_fraction", 0.2, "forest");

    const json& g = detail::section(doc, "grid_search");
    p.grid_search = ov.grid_search || detail::get_or(g, "enabled", false, "grid_search");
    p.embedding_grid = detail::get_or(g, "embedding_dims", p.embedding_grid, "grid_search");
    p.k_grid = detail::get_or(g, "k", p.k_grid, "grid_search");
    if (ov.grid_search) doc["grid_search"]["enabled"] = true;
    p.validate();

    c.moran_permutations = detail::get_or(detail::section(doc, "moran"), "permutations", 999, "moran");
    if (c.moran_permutations < 0) throw ConfigError("config: moran.permutations must be >= 0");

    const json& sc = detail::section(doc, "scenario");
    for (int lvl : detail::get_or(sc, "selector", std::vector<int>{}, "scenario")) c.scenario.selector.insert(lvl);
    c.scenario.multipliers = detail::get_or(sc, "multipliers", std::map<std::string, double>{}, "scenario");
    c.scenario.validate();

    c.document = std::move(doc);
    return c;
}

inline AppConfig load_config(const fs::path& path, const Overrides& ov = {}) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    json doc;
    try {
        doc = geo::read_json_file(path);
    } catch (const DataError& e) {
        throw ConfigError(e.what());
    }
    return parse_config(std::move(doc), path, ov);
}

}  // namespace gridres::app
