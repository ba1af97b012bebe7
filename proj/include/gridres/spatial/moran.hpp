#pragma once

// Queen contiguity weights on the cell lattice and global Moran's I.

#include "gridres/common.hpp"
#include "gridres/geo/grid.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace gridres::spatial {

struct SpatialWeights {
    // Indexed by cell id. Masked or isolated cells have empty rows.
    std::vector<std::vector<int>> neighbors;
    std::vector<std::vector<double>> weights;  // row-standardised
    std::vector<bool> active;                  // unmasked and with >= 1 neighbour

    std::size_t size() const { return neighbors.size(); }
    std::size_t active_count() const { return static_cast<std::size_t>(std::count(active.begin(), active.end(), true)); }
};

/// 8-neighbourhood restricted to unmasked cells. `mask[id]` true keeps a
/// cell; an empty mask keeps all of them.
inline SpatialWeights queen_weights(const geo::Grid& grid, const std::vector<bool>& mask = {}) {
    const int n = grid.n_rows * grid.n_cols;
    if (!mask.empty() && static_cast<int>(mask.size()) != n)
        throw std::invalid_argument("queen_weights: mask length " + std::to_string(mask.size()) + " != cell count " +
                                    std::to_string(n));
    auto kept = [&](int id) { return mask.empty() || mask[static_cast<std::size_t>(id)]; };
    SpatialWeights w;
    w.neighbors.resize(static_cast<std::size_t>(n));
    w.weights.resize(static_cast<std::size_t>(n));
    w.active.assign(static_cast<std::size_t>(n), false);
    std::size_t isolated = 0;
    for (int r = 0; r < grid.n_rows; ++r) {
        for (int c = 0; c < grid.n_cols; ++c) {
            const int id = r * grid.n_cols + c;
            if (!kept(id)) continue;
            auto& nb = w.neighbors[static_cast<std::size_t>(id)];
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const int rr = r + dr, cc = c + dc;
                    if (rr < 0 || cc < 0 || rr >= grid.n_rows || cc >= grid.n_cols) continue;
                    const int j = rr * grid.n_cols + cc;
                    if (kept(j)) nb.push_back(j);
                }
            std::sort(nb.begin(), nb.end());
            if (nb.empty()) {
                ++isolated;
                continue;
            }
            w.active[static_cast<std::size_t>(id)] = true;
            w.weights[static_cast<std::size_t>(id)].assign(nb.size(), 1.0 / static_cast<double>(nb.size()));
        }
    }
    if (isolated > 0) warn("queen_weights: " + std::to_string(isolated) + " cell(s) without neighbours excluded");
    return w;
}

struct MoranResult {
    double i = 0.0;
    double p_value = 1.0;  // one-sided, greater
    double expected = 0.0;  // -1 / (n - 1)
    std::size_t n = 0;
    int permutations = 0;
};

namespace detail {

/// I over the active cells; `x` is indexed by cell id.
inline double moran_statistic(const std::vector<double>& x, const SpatialWeights& w, const std::vector<int>& ids,
                              double s0) {
    double mean = 0.0;
    for (int id : ids) mean += x[static_cast<std::size_t>(id)];
    mean /= static_cast<double>(ids.size());
    double num = 0.0, den = 0.0;
    for (int id : ids) {
        const double zi = x[static_cast<std::size_t>(id)] - mean;
        den += zi * zi;
        const auto& nb = w.neighbors[static_cast<std::size_t>(id)];
        const auto& wt = w.weights[static_cast<std::size_t>(id)];
        double lag = 0.0;
        for (std::size_t t = 0; t < nb.size(); ++t) {
            if (!w.active[static_cast<std::size_t>(nb[t])]) continue;
            lag += wt[t] * (x[static_cast<std::size_t>(nb[t])] - mean);
        }
        num += zi * lag;
    }
    return static_cast<double>(ids.size()) / s0 * num / den;
}

}  // namespace detail

/// Global Moran's I with a permutation p-value (1 + #{I_perm >= I}) /
/// (permutations + 1). Values are indexed by cell id; only active cells count.
inline MoranResult morans_i(const std::vector<double>& values, const SpatialWeights& w, int permutations = 999,
                            std::uint64_t seed = 0) {
    if (values.size() != w.size())
        throw std::invalid_argument("morans_i: " + std::to_string(values.size()) + " values for " +
                                    std::to_string(w.size()) + " cells");
    if (permutations < 0) throw ConfigError("morans_i: permutations must be >= 0");
    std::vector<int> ids;
    for (std::size_t i = 0; i < w.size(); ++i)
        if (w.active[i]) {
            if (!std::isfinite(values[i])) throw DataError("morans_i: non-finite value at cell " + std::to_string(i));
            ids.push_back(static_cast<int>(i));
        }
    if (ids.size() < 2) throw DataError("morans_i: fewer than two cells with neighbours");
    const double first = values[static_cast<std::size_t>(ids[0])];
    if (std::all_of(ids.begin(), ids.end(), [&](int id) { return values[static_cast<std::size_t>(id)] == first; }))
        throw DataError("morans_i: constant field has zero variance");

    // Weights towards excluded cells are dropped, so S0 is the kept mass.
    double s0 = 0.0;
    for (int id : ids) {
        const auto& nb = w.neighbors[static_cast<std::size_t>(id)];
        for (std::size_t t = 0; t < nb.size(); ++t)
            if (w.active[static_cast<std::size_t>(nb[t])]) s0 += w.weights[static_cast<std::size_t>(id)][t];
    }

    MoranResult r;
    r.n = ids.size();
    r.permutations = permutations;
    r.expected = -1.0 / static_cast<double>(r.n - 1);
    r.i = detail::moran_statistic(values, w, ids, s0);

    std::size_t at_least = 0;
    std::vector<double> perm(values);
    std::vector<double> pool(ids.size());
    for (int p = 0; p < permutations; ++p) {
        auto rng = make_rng(seed, "moran.permutation", static_cast<std::uint64_t>(p));
        for (std::size_t t = 0; t < ids.size(); ++t) pool[t] = values[static_cast<std::size_t>(ids[t])];
        shuffle_in_place(pool, rng);
        for (std::size_t t = 0; t < ids.size(); ++t) perm[static_cast<std::size_t>(ids[t])] = pool[t];
        if (detail::moran_statistic(perm, w, ids, s0) >= r.i) ++at_least;
    }
    r.p_value = static_cast<double>(1 + at_least) / static_cast<double>(permutations + 1);
    return r;
}

}  // namespace gridres::spatial
