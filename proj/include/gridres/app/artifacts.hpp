#pragma once

// Output helpers: content hashes, the run manifest, cell GeoJSON and the
// small CSV tables exchanged between subcommands.

#include "gridres/csv.hpp"
#include "gridres/geo/grid.hpp"
#include "gridres/geo/io.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace gridres::app {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string read_file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cannot open '" + p.string() + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline std::string file_hash(const fs::path& p) { return hex64(fnv1a64(read_file_bytes(p))); }

inline void write_json_file(const fs::path& p, const json& j) { write_text_file(p, j.dump(2) + "\n"); }

/// One entry per stage; re-running a stage replaces its entry.
class Manifest {
public:
    explicit Manifest(fs::path path) : path_(std::move(path)) {
        if (fs::exists(path_)) doc_ = geo::read_json_file(path_);
        if (!doc_.is_object()) doc_ = json::object();
        doc_["format"] = "gridres.manifest";
        doc_["tool_version"] = kToolVersion;
        if (!doc_.contains("stages")) doc_["stages"] = json::object();
    }

    void record(const std::string& stage, const std::string& config_hash, const std::vector<fs::path>& inputs,
                const std::vector<fs::path>& outputs, double wall_seconds) {
        json e;
        e["config_hash"] = config_hash;
        e["inputs"] = json::object();
        for (const auto& p : inputs) e["inputs"][p.filename().string()] = file_hash(p);
        e["outputs"] = json::object();
        for (const auto& p : outputs) e["outputs"][p.filename().string()] = file_hash(p);
        e["wall_seconds"] = wall_seconds;
        doc_["stages"][stage] = std::move(e);
        write_json_file(path_, doc_);
    }

    const json& document() const { return doc_; }

private:
    fs::path path_;
    json doc_;
};

class Stopwatch {
public:
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// ---------------------------------------------------------------------------
// GeoJSON

inline json cell_polygon(const geo::GridCell& c) {
    const auto& s = c.square;
    return json{{"type", "Polygon"},
                {"coordinates",
                 json::array({json::array({json::array({s.min_x, s.min_y}), json::array({s.max_x, s.min_y}),
                                           json::array({s.max_x, s.max_y}), json::array({s.min_x, s.max_y}),
                                           json::array({s.min_x, s.min_y})})})}};
}

/// FeatureCollection of the listed cells; `props[i]` goes with `ids[i]`.
inline json cells_geojson(const geo::Grid& grid, const std::vector<int>& ids, const std::vector<json>& props) {
    if (ids.size() != props.size()) throw std::invalid_argument("cells_geojson: property count mismatch");
    json fc{{"type", "FeatureCollection"}, {"features", json::array()}};
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= grid.size())
            throw DataError("cell id " + std::to_string(ids[i]) + " is not on the grid");
        json p = props[i];
        p["cell_id"] = ids[i];
        fc["features"].push_back(
            json{{"type", "Feature"}, {"geometry", cell_polygon(grid.cells[static_cast<std::size_t>(ids[i])])}, {"properties", p}});
    }
    return fc;
}

/// Structural problems of a Polygon FeatureCollection; empty when valid.
inline std::vector<std::string> geojson_problems(const json& doc) {
    std::vector<std::string> out;
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
        out.push_back("root is not a FeatureCollection");
        return out;
    }
    if (!doc.contains("features") || !doc["features"].is_array()) {
        out.push_back("features is not an array");
        return out;
    }
    std::size_t i = 0;
    for (const auto& f : doc["features"]) {
        const std::string at = "feature " + std::to_string(i++);
        if (!f.is_object() || f.value("type", "") != "Feature") {
            out.push_back(at + ": not a Feature");
            continue;
        }
        if (!f.contains("properties") || !(f["properties"].is_object() || f["properties"].is_null()))
            out.push_back(at + ": properties missing");
        if (!f.contains("geometry") || !f["geometry"].is_object()) {
            out.push_back(at + ": geometry missing");
            continue;
        }
        const auto& g = f["geometry"];
        if (g.value("type", "") != "Polygon") {
            out.push_back(at + ": geometry is not a Polygon");
            continue;
        }
        if (!g.contains("coordinates") || !g["coordinates"].is_array() || g["coordinates"].empty()) {
            out.push_back(at + ": no rings");
            continue;
        }
        for (const auto& ring : g["coordinates"]) {
            if (!ring.is_array() || ring.size() < 4) {
                out.push_back(at + ": ring has fewer than 4 positions");
                continue;
            }
            bool finite = true;
            for (const auto& pos : ring) {
                if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number() ||
                    !std::isfinite(pos[0].get<double>()) || !std::isfinite(pos[1].get<double>()))
                    finite = false;
            }
            if (!finite) {
                out.push_back(at + ": non-finite or malformed position");
                continue;
            }
            if (ring.front() != ring.back()) out.push_back(at + ": ring is not closed");
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Level tables

struct LevelRow {
    int cell_id = 0;
    int cluster = 0;
    int level = 0;
    double aggregated = 0.0;
};

inline std::string levels_to_csv(const std::vector<LevelRow>& rows) {
    std::string s = "cell_id,cluster,level,aggregated_score\n";
    for (const auto& r : rows)
        s += std::to_string(r.cell_id) + "," + std::to_string(r.cluster) + "," + std::to_string(r.level) + "," +
             format_double(r.aggregated) + "\n";
    return s;
}

inline std::vector<LevelRow> read_levels(const fs::path& path) {
    const auto t = read_csv(path);
    const auto ci = t.column("cell_id"), cl = t.column("cluster"), lv = t.column("level"),
               ag = t.column("aggregated_score");
    std::vector<LevelRow> rows;
    for (const auto& r : t.rows)
        rows.push_back({static_cast<int>(parse_int(r[ci], path)), static_cast<int>(parse_int(r[cl], path)),
                        static_cast<int>(parse_int(r[lv], path)), parse_double(r[ag], path)});
    return rows;
}

/// Risk CSV: columns cell_id and risk_level.
inline std::map<int, int> read_risk(const fs::path& path) {
    const auto t = read_csv(path);
    const auto ci = t.column("cell_id"), rl = t.column("risk_level");
    std::map<int, int> out;
    for (const auto& r : t.rows) {
        const int id = static_cast<int>(parse_int(r[ci], path));
        if (!out.emplace(id, static_cast<int>(parse_int(r[rl], path))).second)
            throw DataError("'" + path.string() + "' lists cell " + std::to_string(id) + " twice");
    }
    return out;
}

}  // namespace gridres::app
