#pragma once

// Subcommands. Each reads its stage inputs from the output directory (or the
// configured layers), writes its artifacts there and records a manifest
// entry.

#include "gridres/app/artifacts.hpp"
#include "gridres/app/config.hpp"
#include "gridres/features/rf_io.hpp"
#include "gridres/nn/serialize.hpp"
#include "gridres/spatial/moran.hpp"
#include "gridres/spatial/risk.hpp"
#include "gridres/spatial/scenario.hpp"

#include <iomanip>
#include <set>
#include <sstream>

namespace gridres::app {

struct OutputPaths {
    fs::path dir;

    fs::path rf() const { return dir / "rf.csv"; }
    fs::path mask() const { return dir / "rf_mask.csv"; }
    fs::path model() const { return dir / "model"; }
    fs::path levels() const { return dir / "levels.csv"; }
    fs::path importances() const { return dir / "importances.csv"; }
    fs::path metrics() const { return dir / "metrics.json"; }
    fs::path cluster_means() const { return dir / "cluster_means.csv"; }
    fs::path train_summary() const { return dir / "train_summary.json"; }
    fs::path search() const { return dir / "grid_search.csv"; }
    fs::path moran() const { return dir / "moran.json"; }
    fs::path scenario_rf() const { return dir / "scenario_rf.csv"; }
    fs::path deltas() const { return dir / "deltas.csv"; }
    fs::path deltas_geojson() const { return dir / "deltas.geojson"; }
    fs::path risk_csv() const { return dir / "risk_resilience.csv"; }
    fs::path risk_geojson() const { return dir / "risk_resilience.geojson"; }
    fs::path report_md() const { return dir / "report.md"; }
    fs::path report_json() const { return dir / "report.json"; }
    fs::path cells_geojson() const { return dir / "cells.geojson"; }
    fs::path manifest() const { return dir / "manifest.json"; }
};

inline std::string config_hash(const AppConfig& c) { return hex64(fnv1a64(c.document.dump())); }

inline geo::Grid config_grid(const AppConfig& c) { return geo::build_grid(c.bbox, c.cell_size); }

namespace detail {

inline void require_input(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p)) throw DataError("missing '" + p.string() + "'; run '" + producer + "' first");
}

inline json vector_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vector json_vector(const json& j) {
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(v.data(), static_cast<Index>(v.size()));
}

inline json metrics_json(const rating::MetricsReport& m, std::size_t holdout) {
    json j;
    j["holdout_size"] = holdout;
    j["accuracy"] = m.accuracy;
    j["precision_macro"] = m.precision_macro;
    j["recall_macro"] = m.recall_macro;
    j["f1_macro"] = m.f1_macro;
    j["precision_micro"] = m.precision_micro;
    j["recall_micro"] = m.recall_micro;
    j["f1_micro"] = m.f1_micro;
    j["auc_macro_ovr"] = std::isfinite(m.auc_macro) ? json(m.auc_macro) : json(nullptr);
    j["evaluated_classes"] = m.evaluated_classes;
    j["confusion"] = json::array();
    for (Index r = 0; r < m.confusion.rows(); ++r) {
        std::vector<int> row(static_cast<std::size_t>(m.confusion.cols()));
        for (Index c = 0; c < m.confusion.cols(); ++c) row[static_cast<std::size_t>(c)] = m.confusion(r, c);
        j["confusion"].push_back(row);
    }
    j["warnings"] = m.warnings;
    return j;
}

/// Levels, importances, metrics and cluster means shared by train and rate.
inline std::vector<fs::path> write_rating(const OutputPaths& out, const features::ResilienceFeatureMatrix& rf,
                                          const std::vector<int>& labels, const rating::RatingResult& r) {
    std::vector<LevelRow> rows;
    for (std::size_t i = 0; i < labels.size(); ++i)
        rows.push_back({rf.cell_ids[i], labels[i], r.cell_levels[i],
                        r.levels.aggregated[static_cast<Index>(labels[i])]});
    write_text_file(out.levels(), levels_to_csv(rows));

    std::string imp = "feature,importance\n";
    for (std::size_t j = 0; j < features::kFeatureCount; ++j)
        imp += std::string(features::kSchema[j].name) + "," + format_double(r.importances[static_cast<Index>(j)]) + "\n";
    write_text_file(out.importances(), imp);

    write_json_file(out.metrics(), metrics_json(r.metrics, r.holdout_rows.size()));

    std::vector<int> counts(static_cast<std::size_t>(r.levels.k()), 0);
    for (int l : labels) ++counts[static_cast<std::size_t>(l)];
    std::string cm = "cluster,level,cells,aggregated_score";
    for (const auto& f : features::kSchema) cm += "," + std::string(f.name);
    cm += "\n";
    for (int c = 0; c < r.levels.k(); ++c) {
        cm += std::to_string(c) + "," + std::to_string(r.levels.level[static_cast<std::size_t>(c)]) + "," +
              std::to_string(counts[static_cast<std::size_t>(c)]) + "," + format_double(r.levels.aggregated[c]);
        for (Index j = 0; j < r.levels.means.cols(); ++j) cm += "," + format_double(r.levels.means(c, j));
        cm += "\n";
    }
    write_text_file(out.cluster_means(), cm);
    return {out.levels(), out.importances(), out.metrics(), out.cluster_means()};
}

inline std::vector<int> level_vector(const std::vector<LevelRow>& rows) {
    std::vector<int> v;
    for (const auto& r : rows) v.push_back(r.level);
    return v;
}

/// Baseline levels aligned to the rows of `rf`.
inline std::vector<int> levels_for(const features::ResilienceFeatureMatrix& rf, const std::vector<LevelRow>& rows,
                                   const fs::path& origin) {
    std::map<int, int> by_cell;
    for (const auto& r : rows) by_cell[r.cell_id] = r.level;
    std::vector<int> out;
    for (int id : rf.cell_ids) {
        auto it = by_cell.find(id);
        if (it == by_cell.end())
            throw DataError("'" + origin.string() + "' has no level for cell " + std::to_string(id));
        out.push_back(it->second);
    }
    return out;
}

}  // namespace detail

// ---------------------------------------------------------------------------

inline features::FeatureInputs load_feature_inputs(const AppConfig& c) {
    features::FeatureInputs in;
    auto areal = [&](const std::string& name) {
        const auto& s = c.areal.at(name);
        return geo::read_polygon_layer(s.path, s.property, s.unit);
    };
    in.building_age = areal("building_age");
    in.poverty_rate = areal("poverty_rate");
    in.education_level = areal("education_level");
    in.social_connectedness = areal("social_connectedness");
    in.internet_speed = areal("internet_speed");
    in.greenspace = geo::read_polygon_layer(c.greenspace.path, c.greenspace.property, c.greenspace.unit,
                                            c.features.greenspace_class);
    in.towers = geo::read_point_layer(c.towers);
    in.healthcare = geo::read_point_layer(c.healthcare);
    in.roads = geo::read_road_segments(c.roads, c.features.road_classes);
    return in;
}

inline features::ResilienceFeatureMatrix cmd_extract(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    const auto grid = config_grid(c);
    const auto rf = features::assemble_rf(grid, load_feature_inputs(c), c.features);
    features::write_rf(rf, out.rf(), out.mask());
    std::vector<fs::path> inputs{c.towers, c.healthcare, c.roads, c.greenspace.path};
    for (const auto& name : areal_layer_names()) inputs.push_back(c.areal.at(name).path);
    Manifest(out.manifest()).record("extract", config_hash(c), inputs, {out.rf(), out.mask()}, sw.seconds());
    return rf;
}

struct TrainOutcome {
    rating::PipelineResult result;
    std::vector<int> cell_ids;
};

inline TrainOutcome cmd_train(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    detail::require_input(out.rf(), "extract");
    const auto rf = features::read_rf(out.rf(), out.mask());
    TrainOutcome t{rating::run_pipeline(rf, c.pipeline), rf.cell_ids};
    const auto& res = t.result;
    const auto& run = res.clustering;

    std::vector<fs::path> written;
    sdae::save_model(run.sdae, out.model() / "sdae");
    for (const char* f : {"encoder.json", "decoder.json", "sdae_manifest.json", "loss_history.csv"})
        written.push_back(out.model() / "sdae" / f);
    nn::save_stack(run.dec.encoder, rating::dec_seed(c.seed, run.embedding_dim, run.k), out.model() / "dec_encoder.json");
    write_json_file(out.model() / "cluster_state.json", dec::to_json(run.dec.state));
    write_json_file(out.model() / "scaling.json", json{{"min", detail::vector_json(res.scaled.scaling.min)},
                                                       {"max", detail::vector_json(res.scaled.scaling.max)},
                                                       {"diagnostics", res.scaled.scaling.diagnostics}});
    for (const char* f : {"dec_encoder.json", "cluster_state.json", "scaling.json"}) written.push_back(out.model() / f);

    auto rating_files = detail::write_rating(out, rf, run.dec.labels, res.rating);
    written.insert(written.end(), rating_files.begin(), rating_files.end());

    json summary;
    summary["seed"] = c.seed;
    summary["embedding_dim"] = run.embedding_dim;
    summary["k"] = run.k;
    summary["cells"] = rf.rows();
    summary["dec_iterations"] = run.dec.iterations;
    summary["dec_kl_history"] = run.dec.loss_history;
    summary["dec_label_change"] = run.dec.label_change;
    summary["selection_score"] = run.score ? json(*run.score) : json(nullptr);
    summary["finetune_initial_loss"] = run.sdae.finetune_initial_loss;
    summary["finetune_final_loss"] = run.sdae.finetune_history.empty() ? json(nullptr) : json(run.sdae.finetune_history.back());
    summary["grid_search"] = res.search.has_value();
    write_json_file(out.train_summary(), summary);
    written.push_back(out.train_summary());

    if (res.search) {
        std::string s = "embedding_dim,k,score,status\n";
        for (const auto& e : res.search->entries) {
            std::string status = e.status;
            for (char& ch : status)
                if (ch == ',' || ch == '\n') ch = ';';
            s += std::to_string(e.embedding_dim) + "," + std::to_string(e.k) + "," +
                 (std::isfinite(e.score) ? format_double(e.score) : std::string("-inf")) + "," + status + "\n";
        }
        write_text_file(out.search(), s);
        written.push_back(out.search());
    }
    Manifest(out.manifest()).record("train", config_hash(c), {out.rf(), out.mask()}, written, sw.seconds());
    return t;
}

/// Re-derives labels and levels from the persisted encoder, centroids and
/// scaling, then re-runs the rating stage.
inline rating::RatingResult cmd_rate(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    detail::require_input(out.rf(), "extract");
    for (const char* f : {"dec_encoder.json", "cluster_state.json", "scaling.json"})
        detail::require_input(out.model() / f, "train");
    const auto rf = features::read_rf(out.rf(), out.mask());
    const auto encoder = nn::load_stack(out.model() / "dec_encoder.json");
    const json state = geo::read_json_file(out.model() / "cluster_state.json");
    const json scaling = geo::read_json_file(out.model() / "scaling.json");

    rating::MinMaxScaling sc;
    sc.min = detail::json_vector(scaling.at("min"));
    sc.max = detail::json_vector(scaling.at("max"));
    const Matrix scaled = sc.apply(rf.values);
    const auto rows = state.at("centroids").get<std::vector<std::vector<double>>>();
    if (rows.empty()) throw DataError("cluster_state.json has no centroids");
    Matrix u(static_cast<Index>(rows.size()), static_cast<Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) u(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    const double alpha = state.at("alpha").get<double>();
    const auto labels = dec::hard_assignment(dec::soft_assignment(sdae::encode(encoder, scaled), u, alpha));
    auto r = rating::rate_clusters(scaled, labels, static_cast<int>(u.rows()), c.pipeline);
    const auto written = detail::write_rating(out, rf, labels, r);
    Manifest(out.manifest()).record(
        "rate", config_hash(c),
        {out.rf(), out.model() / "dec_encoder.json", out.model() / "cluster_state.json", out.model() / "scaling.json"},
        written, sw.seconds());
    return r;
}

inline spatial::MoranResult cmd_moran(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    detail::require_input(out.levels(), "train");
    const auto grid = config_grid(c);
    const auto rows = read_levels(out.levels());
    std::vector<double> values(grid.size(), 0.0);
    std::vector<bool> mask(grid.size(), false);
    for (const auto& r : rows) {
        if (r.cell_id < 0 || static_cast<std::size_t>(r.cell_id) >= grid.size())
            throw DataError("levels.csv cell " + std::to_string(r.cell_id) + " is not on the configured grid");
        values[static_cast<std::size_t>(r.cell_id)] = r.level;
        mask[static_cast<std::size_t>(r.cell_id)] = true;
    }
    const auto w = spatial::queen_weights(grid, mask);
    const std::uint64_t seed = derive_seed(c.seed, "moran");
    const auto m = spatial::morans_i(values, w, c.moran_permutations, seed);
    write_json_file(out.moran(), json{{"statistic", "global_morans_i"},
                                      {"weights", "queen_row_standardised"},
                                      {"I", m.i},
                                      {"expected_I", m.expected},
                                      {"p_value", m.p_value},
                                      {"alternative", "greater"},
                                      {"n", m.n},
                                      {"permutations", m.permutations}});
    Manifest(out.manifest()).record("moran", config_hash(c), {out.levels()}, {out.moran()}, sw.seconds());
    return m;
}

inline spatial::RerateResult cmd_scenario(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    detail::require_input(out.rf(), "extract");
    detail::require_input(out.levels(), "train");
    detail::require_input(out.train_summary(), "train");
    const auto rf = features::read_rf(out.rf(), out.mask());
    const auto before = detail::levels_for(rf, read_levels(out.levels()), out.levels());
    const json summary = geo::read_json_file(out.train_summary());

    rating::PipelineConfig p = c.pipeline;
    p.grid_search = false;
    p.sdae.embedding_dim = summary.at("embedding_dim").get<Index>();
    p.dec.k = summary.at("k").get<int>();
    if (summary.at("seed").get<std::uint64_t>() != c.seed)
        throw ConfigError("scenario seed differs from the seed of the baseline training run");

    const auto after_rf = spatial::apply_scenario(rf, before, c.scenario);
    features::write_rf(after_rf, out.scenario_rf(), out.dir / "scenario_rf_mask.csv");
    auto r = spatial::rerate_and_compare(rf, before, after_rf, p);

    std::string csv = "cell_id,level_before,level_after,delta\n";
    std::vector<json> props;
    for (std::size_t i = 0; i < r.cell_ids.size(); ++i) {
        csv += std::to_string(r.cell_ids[i]) + "," + std::to_string(r.before[i]) + "," + std::to_string(r.after[i]) +
               "," + std::to_string(r.delta[i]) + "\n";
        props.push_back(json{{"level_before", r.before[i]}, {"level_after", r.after[i]}, {"delta", r.delta[i]}});
    }
    write_text_file(out.deltas(), csv);
    write_json_file(out.deltas_geojson(), cells_geojson(config_grid(c), r.cell_ids, props));
    Manifest(out.manifest()).record("scenario", config_hash(c), {out.rf(), out.levels(), out.train_summary()},
                                    {out.scenario_rf(), out.deltas(), out.deltas_geojson()}, sw.seconds());
    return r;
}

inline std::vector<spatial::RiskResilienceLabel> cmd_risk_combine(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    if (!c.risk) throw ConfigError("config: layers.risk is required for risk-combine");
    detail::require_input(out.levels(), "train");
    const auto rows = read_levels(out.levels());
    const auto risk = read_risk(*c.risk);
    std::vector<int> ids, rl, res;
    for (const auto& r : rows) {
        auto it = risk.find(r.cell_id);
        if (it == risk.end())
            throw DataError("'" + c.risk->string() + "' has no risk level for cell " + std::to_string(r.cell_id));
        ids.push_back(r.cell_id);
        rl.push_back(it->second);
        res.push_back(r.level);
    }
    std::set<int> rated(ids.begin(), ids.end());
    std::size_t unused = 0;
    for (const auto& [id, lvl] : risk) unused += !rated.count(id);
    if (unused > 0) warn(std::to_string(unused) + " risk row(s) refer to unrated cells and were ignored");

    const auto labels = spatial::combine_risk_resilience(rl, res, ids);
    std::string csv = "cell_id,risk_level,resilience_level,label,flagged\n";
    std::vector<json> props;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        csv += std::to_string(ids[i]) + "," + std::to_string(rl[i]) + "," + std::to_string(res[i]) + "," +
               labels[i].name() + "," + (labels[i].flagged() ? "1" : "0") + "\n";
        props.push_back(json{{"risk_level", rl[i]},
                             {"resilience_level", res[i]},
                             {"label", labels[i].name()},
                             {"flag", labels[i].flagged()}});
    }
    write_text_file(out.risk_csv(), csv);
    write_json_file(out.risk_geojson(), cells_geojson(config_grid(c), ids, props));
    Manifest(out.manifest()).record("risk-combine", config_hash(c), {out.levels(), *c.risk},
                                    {out.risk_csv(), out.risk_geojson()}, sw.seconds());
    return labels;
}

/// Bundles the stage outputs present in the output directory into a
/// markdown report, a JSON report and one cell GeoJSON.
inline json cmd_report(const AppConfig& c) {
    Stopwatch sw;
    const OutputPaths out{c.output_dir};
    detail::require_input(out.levels(), "train");
    detail::require_input(out.cluster_means(), "train");
    const auto rows = read_levels(out.levels());
    const auto means = read_csv(out.cluster_means());
    std::vector<fs::path> inputs{out.levels(), out.cluster_means()};

    json rep;
    rep["format"] = "gridres.report";
    rep["cells"] = rows.size();
    std::map<int, int> hist;
    for (const auto& r : rows) ++hist[r.level];
    rep["level_histogram"] = json::object();
    for (const auto& [lvl, n] : hist) rep["level_histogram"][std::to_string(lvl)] = n;

    rep["cluster_means"] = json::array();
    for (const auto& row : means.rows) {
        json e;
        for (std::size_t j = 0; j < means.header.size(); ++j) {
            double v;
            e[means.header[j]] = try_parse_double(row[j], v) ? json(v) : json(row[j]);
        }
        rep["cluster_means"].push_back(e);
    }
    std::sort(rep["cluster_means"].begin(), rep["cluster_means"].end(),
              [](const json& a, const json& b) { return a["level"].get<double>() < b["level"].get<double>(); });

    if (fs::exists(out.importances())) {
        const auto t = read_csv(out.importances());
        rep["importances"] = json::object();
        for (const auto& r : t.rows) rep["importances"][r[0]] = parse_double(r[1], out.importances());
        inputs.push_back(out.importances());
    }
    auto attach = [&](const fs::path& p, const char* key) {
        if (!fs::exists(p)) return;
        rep[key] = geo::read_json_file(p);
        inputs.push_back(p);
    };
    attach(out.metrics(), "metrics");
    attach(out.moran(), "moran");
    attach(out.train_summary(), "training");

    std::map<int, json> props;
    for (const auto& r : rows) props[r.cell_id] = json{{"cluster", r.cluster}, {"level", r.level}};
    if (fs::exists(out.deltas())) {
        const auto t = read_csv(out.deltas());
        std::map<int, int> dh;
        for (const auto& r : t.rows) {
            const int id = static_cast<int>(parse_int(r[t.column("cell_id")], out.deltas()));
            const int d = static_cast<int>(parse_int(r[t.column("delta")], out.deltas()));
            if (props.count(id)) props[id]["delta"] = d;
            ++dh[d];
        }
        rep["delta_histogram"] = json::object();
        for (const auto& [d, n] : dh) rep["delta_histogram"][std::to_string(d)] = n;
        inputs.push_back(out.deltas());
    }
    if (fs::exists(out.risk_csv())) {
        const auto t = read_csv(out.risk_csv());
        std::map<std::string, int> lh;
        int flagged = 0;
        for (const auto& r : t.rows) {
            const int id = static_cast<int>(parse_int(r[t.column("cell_id")], out.risk_csv()));
            const std::string label = r[t.column("label")];
            const bool flag = r[t.column("flagged")] == "1";
            if (props.count(id)) {
                props[id]["risk_label"] = label;
                props[id]["flag"] = flag;
            }
            ++lh[label];
            flagged += flag;
        }
        rep["risk_resilience"] = json{{"labels", lh}, {"flagged_cells", flagged}};
        inputs.push_back(out.risk_csv());
    }

    std::vector<int> ids;
    std::vector<json> pv;
    for (auto& [id, p] : props) {
        ids.push_back(id);
        pv.push_back(p);
    }
    write_json_file(out.cells_geojson(), cells_geojson(config_grid(c), ids, pv));
    write_json_file(out.report_json(), rep);

    // Markdown rendering of the same content.
    std::ostringstream md;
    md << std::setprecision(4);
    md << "# Resilience rating report\n\n";
    md << "Cells rated: " << rows.size() << "\n\n";
    md << "## Level histogram\n\n| level | cells |\n|---|---|\n";
    for (const auto& [lvl, n] : hist) md << "| " << lvl << " | " << n << " |\n";
    md << "\n## Cluster feature means\n\nMin-max scaled, direction-aligned feature means per cluster.\n\n";
    md << "| level | cluster | cells | score |";
    for (const auto& f : features::kSchema) md << ' ' << f.name << " |";
    md << "\n|---|---|---|---|";
    for (std::size_t j = 0; j < features::kFeatureCount; ++j) md << "---|";
    md << "\n";
    for (const auto& e : rep["cluster_means"]) {
        md << "| " << e["level"].get<double>() << " | " << e["cluster"].get<double>() << " | " << e["cells"].get<double>()
           << " | " << e["aggregated_score"].get<double>() << " |";
        for (const auto& f : features::kSchema) md << ' ' << e[std::string(f.name)].get<double>() << " |";
        md << "\n";
    }
    if (rep.contains("importances")) {
        md << "\n## Feature importances\n\n| feature | importance |\n|---|---|\n";
        for (const auto& f : features::kSchema)
            md << "| " << f.name << " | " << rep["importances"][std::string(f.name)].get<double>() << " |\n";
    }
    if (rep.contains("metrics")) {
        const auto& m = rep["metrics"];
        md << "\n## Classifier fidelity (holdout of " << m["holdout_size"].get<std::size_t>() << " cells)\n\n";
        md << "| metric | macro | micro |\n|---|---|---|\n";
        md << "| precision | " << m["precision_macro"].get<double>() << " | " << m["precision_micro"].get<double>() << " |\n";
        md << "| recall | " << m["recall_macro"].get<double>() << " | " << m["recall_micro"].get<double>() << " |\n";
        md << "| F1 | " << m["f1_macro"].get<double>() << " | " << m["f1_micro"].get<double>() << " |\n";
        md << "\nMacro one-vs-rest AUC: "
           << (m["auc_macro_ovr"].is_null() ? std::string("undefined") : std::to_string(m["auc_macro_ovr"].get<double>()))
           << "\n";
    }
    if (rep.contains("moran")) {
        const auto& m = rep["moran"];
        md << "\n## Global Moran's I\n\nI = " << m["I"].get<double>() << ", p = " << m["p_value"].get<double>()
           << " (" << m["permutations"].get<int>() << " permutations, n = " << m["n"].get<std::size_t>() << ")\n";
    }
    if (rep.contains("delta_histogram")) {
        md << "\n## Scenario level changes\n\n| delta | cells |\n|---|---|\n";
        for (const auto& [d, n] : rep["delta_histogram"].items()) md << "| " << d << " | " << n.get<int>() << " |\n";
    }
    if (rep.contains("risk_resilience")) {
        md << "\n## Risk and resilience\n\n| category | cells |\n|---|---|\n";
        for (const auto& [l, n] : rep["risk_resilience"]["labels"].items()) md << "| " << l << " | " << n.get<int>() << " |\n";
        md << "\nCells needing special attention: " << rep["risk_resilience"]["flagged_cells"].get<int>() << "\n";
    }
    write_text_file(out.report_md(), md.str());
    Manifest(out.manifest()).record("report", config_hash(c), inputs,
                                    {out.report_md(), out.report_json(), out.cells_geojson()}, sw.seconds());
    return rep;
}

}  // namespace gridres::app
