#pragma once

#include "gridres/common.hpp"

#include <vector>

namespace gridres::dec {

struct KMeansResult {
    Matrix centroids;  // k x d
    std::vector<int> labels;
    double inertia = 0.0;
    int iterations = 0;
};

namespace detail {

inline int nearest_centroid(const Matrix& x, Index i, const Matrix& centroids, double* dist2 = nullptr) {
    int best = 0;
    double best_d = kInf;
    for (Index j = 0; j < centroids.rows(); ++j) {
        const double d = (x.row(i) - centroids.row(j)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = static_cast<int>(j);
        }
    }
    if (dist2) *dist2 = best_d;
    return best;
}

/// k-means++ seeding: first centre uniform, then D^2 sampling.
inline Matrix kmeanspp_seed(const Matrix& x, int k, Rng& rng) {
    const Index m = x.rows();
    Matrix c(k, x.cols());
    c.row(0) = x.row(static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(m))));
    std::vector<double> d2(static_cast<std::size_t>(m));
    for (Index i = 0; i < m; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - c.row(0)).squaredNorm();
    for (int j = 1; j < k; ++j) {
        double total = 0.0;
        for (double d : d2) total += d;
        Index pick = 0;
        if (total > 0.0) {
            const double r = uniform01(rng) * total;
            double acc = 0.0;
            pick = m - 1;
            for (Index i = 0; i < m; ++i) {
                acc += d2[static_cast<std::size_t>(i)];
                if (acc > r) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(m)));
        }
        c.row(j) = x.row(pick);
        for (Index i = 0; i < m; ++i)
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - c.row(j)).squaredNorm());
    }
    return c;
}

inline KMeansResult lloyd(const Matrix& x, Matrix centroids, int max_iter) {
    const Index m = x.rows();
    const int k = static_cast<int>(centroids.rows());
    KMeansResult r;
    r.labels.assign(static_cast<std::size_t>(m), -1);
    std::vector<double> d2(static_cast<std::size_t>(m));
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Index i = 0; i < m; ++i) {
            const int l = nearest_centroid(x, i, centroids, &d2[static_cast<std::size_t>(i)]);
            if (l != r.labels[static_cast<std::size_t>(i)]) {
                r.labels[static_cast<std::size_t>(i)] = l;
                changed = true;
            }
        }
        r.iterations = it + 1;
        if (!changed && it > 0) break;
        Matrix sums = Matrix::Zero(k, x.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < m; ++i) {
            sums.row(r.labels[static_cast<std::size_t>(i)]) += x.row(i);
            ++counts[static_cast<std::size_t>(r.labels[static_cast<std::size_t>(i)])];
        }
        for (int j = 0; j < k; ++j) {
            if (counts[static_cast<std::size_t>(j)] > 0) {
                centroids.row(j) = sums.row(j) / static_cast<double>(counts[static_cast<std::size_t>(j)]);
                continue;
            }
            // Empty cluster: re-seed at the point farthest from its centroid.
            Index far = 0;
            for (Index i = 1; i < m; ++i)
                if (d2[static_cast<std::size_t>(i)] > d2[static_cast<std::size_t>(far)]) far = i;
            centroids.row(j) = x.row(far);
            d2[static_cast<std::size_t>(far)] = 0.0;
            changed = true;
        }
    }
    r.inertia = 0.0;
    for (Index i = 0; i < m; ++i) {
        double d;
        r.labels[static_cast<std::size_t>(i)] = nearest_centroid(x, i, centroids, &d);
        r.inertia += d;
    }
    r.centroids = std::move(centroids);
    return r;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ starts; the best of `restarts` runs by
/// inertia is kept. Rows of `x` are samples.
inline KMeansResult kmeans(const Matrix& x, int k, std::uint64_t seed, int restarts = 10, int max_iter = 300) {
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (x.rows() < k)
        throw DataError("kmeans: " + std::to_string(x.rows()) + " samples cannot form " + std::to_string(k) +
                        " clusters");
    if (!x.allFinite()) throw DataError("kmeans: non-finite input");
    KMeansResult best;
    best.inertia = kInf;
    for (int r = 0; r < std::max(1, restarts); ++r) {
        auto rng = make_rng(seed, "kmeans.init", static_cast<std::uint64_t>(r));
        auto res = detail::lloyd(x, detail::kmeanspp_seed(x, k, rng), max_iter);
        if (res.inertia < best.inertia) best = std::move(res);
    }
    return best;
}

}  // namespace gridres::dec
