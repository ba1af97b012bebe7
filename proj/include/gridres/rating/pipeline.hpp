#pragma once

// Scale -> SDAE -> DEC -> forest -> levels, plus the (d_e, k) grid search.

#include "gridres/dec/dec.hpp"
#include "gridres/features/features.hpp"
#include "gridres/rating/forest.hpp"
#include "gridres/rating/metrics.hpp"
#include "gridres/rating/rating.hpp"
#include "gridres/sdae/sdae.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridres::rating {

/// Scores a clustering of an embedding; nothing means "unusable".
using SelectionCriterion = std::function<std::optional<double>(const Matrix& embedding, const std::vector<int>& labels)>;

inline SelectionCriterion silhouette_criterion() {
    return [](const Matrix& z, const std::vector<int>& l) { return silhouette_score(z, l); };
}

struct PipelineConfig {
    sdae::SdaeConfig sdae;  // embedding_dim is the default d_e
    dec::DecConfig dec;     // k is the default cluster count
    ForestConfig forest;
    double holdout_fraction = 0.2;
    std::uint64_t seed = 0;
    bool grid_search = false;
    std::vector<Index> embedding_grid{10, 12, 24, 36};
    std::vector<int> k_grid{4, 5, 6, 7};

    void validate() const {
        sdae.train.validate();
        dec.validate();
        forest.validate();
        if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must be in (0, 1)");
        if (grid_search && (embedding_grid.empty() || k_grid.empty())) throw ConfigError("grid search spaces are empty");
    }
};

// Seeds depend on the configuration values rather than on their position in
// the grid, so a standalone run reproduces the matching grid-search run.
inline std::uint64_t sdae_seed(std::uint64_t root, Index d_e) {
    return derive_seed(root, "sdae", static_cast<std::uint64_t>(d_e));
}
inline std::uint64_t dec_seed(std::uint64_t root, Index d_e, int k) {
    return derive_seed(root, "dec", static_cast<std::uint64_t>(d_e) * 1000u + static_cast<std::uint64_t>(k));
}

struct ClusteringRun {
    Index embedding_dim = 0;
    int k = 0;
    sdae::SdaeModel sdae;
    dec::DecResult dec;
    Matrix embedding;  // refined encoder output, one row per cell
    std::optional<double> score;
};

inline sdae::SdaeModel fit_sdae(const Matrix& scaled, const PipelineConfig& cfg, Index d_e) {
    sdae::SdaeConfig sc = cfg.sdae;
    sc.embedding_dim = d_e;
    sc.train.seed = sdae_seed(cfg.seed, d_e);
    return sdae::train_sdae(scaled, sc);
}

inline ClusteringRun fit_clusters(const Matrix& scaled, const sdae::SdaeModel& model, const PipelineConfig& cfg, int k,
                                  const SelectionCriterion& criterion = silhouette_criterion()) {
    dec::DecConfig dc = cfg.dec;
    dc.k = k;
    dc.seed = dec_seed(cfg.seed, model.embedding_dim(), k);
    ClusteringRun run;
    run.embedding_dim = model.embedding_dim();
    run.k = k;
    run.sdae = model;
    run.dec = dec::dec_train(model.encoder, scaled, dc);
    run.embedding = sdae::encode(run.dec.encoder, scaled);
    run.score = criterion(run.embedding, run.dec.labels);
    return run;
}

struct GridSearchEntry {
    Index embedding_dim = 0;
    int k = 0;
    double score = -kInf;
    std::string status;  // "ok" or the reason the config was discarded
};

struct GridSearchReport {
    std::vector<GridSearchEntry> entries;
    Index chosen_embedding_dim = 0;
    int chosen_k = 0;
};

namespace detail {

inline int used_clusters(const std::vector<int>& labels, int k) {
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    for (int l : labels) used[static_cast<std::size_t>(l)] = true;
    int n = 0;
    for (bool u : used) n += u;
    return n;
}

}  // namespace detail

/// Every (d_e, k) pair is scored; one SDAE is trained per d_e and shared by
/// the k values. Diverging configs and configs leaving a cluster empty score
/// -inf. Highest score wins; ties go to the smaller d_e, then the smaller k.
/// The winning run is moved into `best`.
inline GridSearchReport grid_search(const Matrix& scaled, const PipelineConfig& cfg, ClusteringRun* best = nullptr,
                                    const SelectionCriterion& criterion = silhouette_criterion()) {
    std::vector<Index> des = cfg.embedding_grid;
    std::vector<int> ks = cfg.k_grid;
    std::sort(des.begin(), des.end());
    des.erase(std::unique(des.begin(), des.end()), des.end());
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

    GridSearchReport report;
    std::optional<ClusteringRun> winner;
    for (Index d_e : des) {
        std::optional<sdae::SdaeModel> model;
        std::string sdae_failure;
        try {
            model = fit_sdae(scaled, cfg, d_e);
        } catch (const DivergenceError& e) {
            sdae_failure = std::string("diverged: ") + e.what();
        }
        for (int k : ks) {
            GridSearchEntry entry{d_e, k, -kInf, "ok"};
            if (!model) {
                entry.status = sdae_failure;
                warn("grid search d_e=" + std::to_string(d_e) + " k=" + std::to_string(k) + ": " + entry.status);
                report.entries.push_back(entry);
                continue;
            }
            try {
                auto run = fit_clusters(scaled, *model, cfg, k, criterion);
                if (detail::used_clusters(run.dec.labels, k) < k)
                    entry.status = "empty cluster";
                else if (!run.score || !std::isfinite(*run.score))
                    entry.status = "criterion undefined";
                else
                    entry.score = *run.score;
                if (entry.status == "ok" && (!winner || entry.score > *winner->score)) winner = std::move(run);
            } catch (const DivergenceError& e) {
                entry.status = std::string("diverged: ") + e.what();
            }
            if (entry.status != "ok")
                warn("grid search d_e=" + std::to_string(d_e) + " k=" + std::to_string(k) + ": " + entry.status);
            report.entries.push_back(entry);
        }
    }
    if (!winner) throw DivergenceError("grid search: no configuration produced a usable clustering");
    report.chosen_embedding_dim = winner->embedding_dim;
    report.chosen_k = winner->k;
    if (best) *best = std::move(*winner);
    return report;
}

struct RatingResult {
    ForestModel forest;  // fitted on all cells; source of the importances
    Vector importances;
    MetricsReport metrics;  // holdout forest on the seeded 80/20 split
    std::vector<Index> holdout_rows;
    LevelAssignment levels;
    std::vector<int> cell_levels;
};

/// Forest importances weight the cluster means of `scaled`; the fidelity
/// metrics come from a second forest that never sees the holdout rows.
inline RatingResult rate_clusters(const Matrix& scaled, const std::vector<int>& labels, int k,
                                  const PipelineConfig& cfg) {
    RatingResult r;
    ForestConfig fc = cfg.forest;
    fc.seed = derive_seed(cfg.seed, "forest");
    r.forest = fit_forest(scaled, labels, fc, k);
    r.importances = r.forest.importances;

    const Index m = scaled.rows();
    auto rng = make_rng(cfg.seed, "holdout");
    std::vector<Index> order = iota_indices(m);
    shuffle_in_place(order, rng);
    const auto n_test =
        static_cast<std::size_t>(std::max<Index>(1, static_cast<Index>(std::llround(cfg.holdout_fraction * static_cast<double>(m)))));
    r.holdout_rows.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_test));
    std::sort(r.holdout_rows.begin(), r.holdout_rows.end());
    std::vector<Index> train_rows(order.begin() + static_cast<std::ptrdiff_t>(n_test), order.end());
    std::sort(train_rows.begin(), train_rows.end());

    Matrix xtr(static_cast<Index>(train_rows.size()), scaled.cols());
    std::vector<int> ytr(train_rows.size());
    for (std::size_t i = 0; i < train_rows.size(); ++i) {
        xtr.row(static_cast<Index>(i)) = scaled.row(train_rows[i]);
        ytr[i] = labels[static_cast<std::size_t>(train_rows[i])];
    }
    Matrix xte(static_cast<Index>(n_test), scaled.cols());
    std::vector<int> yte(n_test);
    for (std::size_t i = 0; i < n_test; ++i) {
        xte.row(static_cast<Index>(i)) = scaled.row(r.holdout_rows[i]);
        yte[i] = labels[static_cast<std::size_t>(r.holdout_rows[i])];
    }
    fc.seed = derive_seed(cfg.seed, "forest.holdout");
    const auto holdout_forest = fit_forest(xtr, ytr, fc, k);
    r.metrics = classification_metrics(yte, holdout_forest.predict(xte), holdout_forest.predict_proba(xte));

    r.levels = aggregate_and_rank(cluster_means(scaled, labels, k), r.importances);
    r.cell_levels = r.levels.cell_levels(labels);
    return r;
}

struct PipelineResult {
    ScaledMatrix scaled;
    ClusteringRun clustering;
    RatingResult rating;
    std::optional<GridSearchReport> search;
};

inline std::vector<std::string> schema_names() {
    std::vector<std::string> names;
    for (const auto& f : features::kSchema) names.emplace_back(f.name);
    return names;
}

/// Full run on a direction-aligned matrix. Without grid search the
/// configured embedding_dim and k are used.
inline PipelineResult run_pipeline(const features::ResilienceFeatureMatrix& rf, const PipelineConfig& cfg,
                                   const SelectionCriterion& criterion = silhouette_criterion()) {
    cfg.validate();
    rf.validate();
    PipelineResult res;
    res.scaled = min_max_scale(rf.values, schema_names());
    if (cfg.grid_search) {
        res.search = grid_search(res.scaled.values, cfg, &res.clustering, criterion);
    } else {
        res.clustering = fit_clusters(res.scaled.values, fit_sdae(res.scaled.values, cfg, cfg.sdae.embedding_dim), cfg,
                                      cfg.dec.k, criterion);
    }
    res.rating = rate_clusters(res.scaled.values, res.clustering.dec.labels, res.clustering.k, cfg);
    return res;
}

}  // namespace gridres::rating
