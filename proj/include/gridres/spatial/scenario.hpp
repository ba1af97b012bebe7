#pragma once

// Urban-development what-if: scale raw features of targeted cells and
// re-rate with the baseline hyperparameters and seed.

#include "gridres/rating/pipeline.hpp"

#include <map>
#include <set>
#include <string>
#include <vector>

namespace gridres::spatial {

struct ScenarioSpec {
    std::set<int> selector;                     // resilience levels targeted
    std::map<std::string, double> multipliers;  // feature name -> factor on the raw value

    void validate() const {
        for (const auto& [name, m] : multipliers) {
            if (!features::feature_index(name)) throw ConfigError("scenario: unknown feature '" + name + "'");
            if (!(m > 0.0) || !std::isfinite(m))
                throw ConfigError("scenario: multiplier for '" + name + "' must be a finite value > 0");
        }
    }
};

/// Targeted entries are mapped back to raw values, multiplied, and aligned
/// again. Identity-transform columns are multiplied in place.
inline features::ResilienceFeatureMatrix apply_scenario(const features::ResilienceFeatureMatrix& rf,
                                                        const std::vector<int>& levels, const ScenarioSpec& spec) {
    spec.validate();
    if (levels.size() != rf.cell_ids.size())
        throw std::invalid_argument("apply_scenario: " + std::to_string(levels.size()) + " levels for " +
                                    std::to_string(rf.cell_ids.size()) + " cells");
    features::ResilienceFeatureMatrix out = rf;
    for (Index i = 0; i < rf.rows(); ++i) {
        if (!spec.selector.count(levels[static_cast<std::size_t>(i)])) continue;
        for (const auto& [name, m] : spec.multipliers) {
            const std::size_t j = *features::feature_index(name);
            const auto t = rf.transforms[j];
            if (t == features::Transform::Identity)
                out.values(i, static_cast<Index>(j)) = rf.values(i, static_cast<Index>(j)) * m;
            else
                out.values(i, static_cast<Index>(j)) = features::apply_transform(t, rf.raw_value(i, j) * m);
        }
    }
    return out;
}

struct RerateResult {
    std::vector<int> cell_ids;
    std::vector<int> before;
    std::vector<int> after;
    std::vector<int> delta;  // after - before
    rating::PipelineResult after_run;
};

/// Re-runs the pipeline on `after` with grid search disabled at the given
/// (d_e, k) and compares against the baseline levels.
inline RerateResult rerate_and_compare(const features::ResilienceFeatureMatrix& before,
                                       const std::vector<int>& before_levels,
                                       const features::ResilienceFeatureMatrix& after, rating::PipelineConfig cfg) {
    if (before.cell_ids != after.cell_ids) throw DataError("rerate_and_compare: feature matrices cover different cells");
    if (before_levels.size() != before.cell_ids.size())
        throw std::invalid_argument("rerate_and_compare: baseline level count mismatch");
    cfg.grid_search = false;
    RerateResult r;
    r.cell_ids = after.cell_ids;
    r.before = before_levels;
    r.after_run = rating::run_pipeline(after, cfg);
    r.after = r.after_run.rating.cell_levels;
    r.delta.resize(r.after.size());
    for (std::size_t i = 0; i < r.after.size(); ++i) r.delta[i] = r.after[i] - r.before[i];
    return r;
}

/// Runs both baseline and scenario pipelines.
inline RerateResult rerate_and_compare(const features::ResilienceFeatureMatrix& before,
                                       const features::ResilienceFeatureMatrix& after,
                                       const rating::PipelineConfig& cfg) {
    rating::PipelineConfig fixed = cfg;
    fixed.grid_search = false;
    const auto base = rating::run_pipeline(before, fixed);
    return rerate_and_compare(before, base.rating.cell_levels, after, fixed);
}

}  // namespace gridres::spatial
