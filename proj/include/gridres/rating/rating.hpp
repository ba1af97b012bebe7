#pragma once

// Scaling, cluster characteristics and importance-weighted level ranking.

#include "gridres/common.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

namespace gridres::rating {

struct MinMaxScaling {
    Vector min;
    Vector max;
    std::vector<std::string> diagnostics;

    /// Applies the stored ranges; constant columns map to 0.
    Matrix apply(const Matrix& x) const {
        if (x.cols() != min.size()) throw std::invalid_argument("MinMaxScaling::apply: column count mismatch");
        Matrix out(x.rows(), x.cols());
        for (Index c = 0; c < x.cols(); ++c) {
            const double range = max[c] - min[c];
            if (range > 0.0)
                out.col(c) = (x.col(c).array() - min[c]) / range;
            else
                out.col(c).setZero();
        }
        return out;
    }
};

struct ScaledMatrix {
    Matrix values;
    MinMaxScaling scaling;
};

/// Per-column (x - min) / (max - min). `names` labels the diagnostics.
inline ScaledMatrix min_max_scale(const Matrix& x, const std::vector<std::string>& names = {}) {
    if (!x.allFinite()) throw DataError("min_max_scale: non-finite values");
    if (x.rows() == 0) throw DataError("min_max_scale: empty matrix");
    ScaledMatrix s;
    s.scaling.min = x.colwise().minCoeff().transpose();
    s.scaling.max = x.colwise().maxCoeff().transpose();
    for (Index c = 0; c < x.cols(); ++c) {
        if (s.scaling.max[c] > s.scaling.min[c]) continue;
        const std::string name =
            static_cast<std::size_t>(c) < names.size() ? names[static_cast<std::size_t>(c)] : "column " + std::to_string(c);
        s.scaling.diagnostics.push_back(name + " is constant; scaled to 0");
        warn(s.scaling.diagnostics.back());
    }
    s.values = s.scaling.apply(x);
    return s;
}

/// k x d matrix of per-cluster column means.
inline Matrix cluster_means(const Matrix& x, const std::vector<int>& labels, int k) {
    if (static_cast<Index>(labels.size()) != x.rows()) throw std::invalid_argument("cluster_means: label count mismatch");
    Matrix sums = Matrix::Zero(k, x.cols());
    std::vector<Index> counts(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < x.rows(); ++i) {
        const int l = labels[static_cast<std::size_t>(i)];
        if (l < 0 || l >= k) throw std::invalid_argument("cluster_means: label " + std::to_string(l) + " out of range");
        sums.row(l) += x.row(i);
        ++counts[static_cast<std::size_t>(l)];
    }
    for (int j = 0; j < k; ++j) {
        if (counts[static_cast<std::size_t>(j)] == 0) throw DataError("cluster_means: cluster " + std::to_string(j) + " is empty");
        sums.row(j) /= static_cast<double>(counts[static_cast<std::size_t>(j)]);
    }
    return sums;
}

struct LevelAssignment {
    Matrix means;            // k x d
    Vector aggregated;       // AR per cluster
    std::vector<int> level;  // per cluster, 1..k
    bool tie = false;

    int k() const { return static_cast<int>(level.size()); }

    std::vector<int> cell_levels(const std::vector<int>& labels) const {
        std::vector<int> out(labels.size());
        for (std::size_t i = 0; i < labels.size(); ++i) out[i] = level.at(static_cast<std::size_t>(labels[i]));
        return out;
    }
};

/// AR_j = sum_i IM_i * mean_ji; levels ascend with AR, ties by cluster index.
inline LevelAssignment aggregate_and_rank(const Matrix& means, const Vector& importances) {
    if (means.cols() != importances.size()) throw std::invalid_argument("aggregate_and_rank: importance length mismatch");
    if (means.rows() == 0) throw std::invalid_argument("aggregate_and_rank: no clusters");
    LevelAssignment a;
    a.means = means;
    a.aggregated = means * importances;
    const auto k = static_cast<std::size_t>(means.rows());
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t x, std::size_t y) { return a.aggregated[static_cast<Index>(x)] < a.aggregated[static_cast<Index>(y)]; });
    a.level.assign(k, 0);
    for (std::size_t r = 0; r < k; ++r) {
        a.level[order[r]] = static_cast<int>(r + 1);
        if (r > 0 && a.aggregated[static_cast<Index>(order[r])] == a.aggregated[static_cast<Index>(order[r - 1])]) {
            a.tie = true;
            warn("aggregate_and_rank: clusters " + std::to_string(order[r - 1]) + " and " + std::to_string(order[r]) +
                 " have equal aggregated scores; ordered by cluster label");
        }
    }
    return a;
}

}  // namespace gridres::rating
