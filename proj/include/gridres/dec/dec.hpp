#pragma once

// Deep embedded clustering: Student-t soft assignment, sharpened target
// distribution, KL self-training of encoder and centroids.

#include "gridres/dec/kmeans.hpp"
#include "gridres/nn/dense.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>
#include <vector>

namespace gridres::dec {

struct ClusterState {
    Matrix centroids;  // k x d_e
    double alpha = 1.0;
    Matrix q;  // m x k soft assignment
    Matrix p;  // m x k target distribution

    int k() const { return static_cast<int>(centroids.rows()); }
};

struct DecConfig {
    int k = 5;
    int max_iterations = 2000;     // mini-batch steps
    int target_update_interval = 0;  // steps between P updates; 0 = one full pass
    double stop_tolerance = 0.001;   // fraction of labels changed
    double learning_rate = 0.01;
    Index batch_size = 256;
    double alpha = 1.0;
    int kmeans_restarts = 10;
    std::uint64_t seed = 0;

    void validate() const {
        if (k < 2) throw ConfigError("DEC needs k >= 2");
        if (!(stop_tolerance >= 0.0 && stop_tolerance <= 1.0)) throw ConfigError("stop_tolerance must be in [0, 1]");
        if (max_iterations < 0) throw ConfigError("max_iterations must be >= 0");
        if (target_update_interval < 0) throw ConfigError("target_update_interval must be >= 0");
        if (!(learning_rate > 0.0)) throw ConfigError("DEC learning_rate must be > 0");
        if (batch_size < 1) throw ConfigError("DEC batch_size must be >= 1");
        if (!(alpha > 0.0)) throw ConfigError("alpha must be > 0");
    }
};

/// q_ij proportional to (1 + |z_i - u_j|^2 / alpha)^(-(alpha + 1) / 2).
inline Matrix soft_assignment(const Matrix& z, const Matrix& centroids, double alpha = 1.0) {
    if (z.cols() != centroids.cols()) throw std::invalid_argument("soft_assignment: dimension mismatch");
    if (!(alpha > 0.0)) throw std::invalid_argument("soft_assignment: alpha must be positive");
    const Index m = z.rows();
    const Index k = centroids.rows();
    Matrix q(m, k);
    const double power = -(alpha + 1.0) / 2.0;
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < k; ++j) {
            const double d2 = (z.row(i) - centroids.row(j)).squaredNorm();
            q(i, j) = alpha == 1.0 ? 1.0 / (1.0 + d2) : std::pow(1.0 + d2 / alpha, power);
        }
        const double s = q.row(i).sum();
        q.row(i) /= s;
    }
    return q;
}

/// p_ij = (q_ij^2 / f_j) / sum_j' (q_ij'^2 / f_j'), f_j = sum_i q_ij.
inline Matrix target_distribution(const Matrix& q) {
    const Vector f = q.colwise().sum().transpose();
    for (Index j = 0; j < f.size(); ++j)
        if (!(f[j] > 0.0)) throw DataError("target_distribution: cluster " + std::to_string(j) + " has zero frequency");
    Matrix p(q.rows(), q.cols());
    for (Index i = 0; i < q.rows(); ++i) {
        for (Index j = 0; j < q.cols(); ++j) p(i, j) = q(i, j) * q(i, j) / f[j];
        p.row(i) /= p.row(i).sum();
    }
    return p;
}

/// KL(P || Q) = sum_ij p_ij ln(p_ij / q_ij) with 0 ln 0 = 0.
inline double kl_divergence(const Matrix& p, const Matrix& q) {
    if (p.rows() != q.rows() || p.cols() != q.cols()) throw std::invalid_argument("kl_divergence: shape mismatch");
    double s = 0.0;
    for (Index i = 0; i < p.rows(); ++i) {
        for (Index j = 0; j < p.cols(); ++j) {
            const double pij = p(i, j);
            if (pij == 0.0) continue;
            if (!(q(i, j) > 0.0))
                throw DataError("kl_divergence: q(" + std::to_string(i) + "," + std::to_string(j) +
                                ") = 0 where p > 0, divergence is infinite");
            s += pij * std::log(pij / q(i, j));
        }
    }
    return s;
}

struct KlGradients {
    Matrix embeddings;  // m x d_e
    Matrix centroids;   // k x d_e
};

/// Gradients of kl_divergence(P, Q(z, u)) with P held fixed.
inline KlGradients kl_gradients(const Matrix& z, const Matrix& centroids, const Matrix& p, double alpha = 1.0) {
    const Matrix q = soft_assignment(z, centroids, alpha);
    if (p.rows() != q.rows() || p.cols() != q.cols()) throw std::invalid_argument("kl_gradients: P shape mismatch");
    const double c = (alpha + 1.0) / alpha;
    KlGradients g{Matrix::Zero(z.rows(), z.cols()), Matrix::Zero(centroids.rows(), centroids.cols())};
    for (Index i = 0; i < z.rows(); ++i) {
        for (Index j = 0; j < centroids.rows(); ++j) {
            const auto diff = z.row(i) - centroids.row(j);
            const double w = c * (p(i, j) - q(i, j)) / (1.0 + diff.squaredNorm() / alpha);
            g.embeddings.row(i) += w * diff;
            g.centroids.row(j) -= w * diff;
        }
    }
    return g;
}

/// Row-wise argmax, ties to the lowest index.
inline std::vector<int> hard_assignment(const Matrix& q) {
    std::vector<int> labels(static_cast<std::size_t>(q.rows()));
    for (Index i = 0; i < q.rows(); ++i) {
        Index best = 0;
        for (Index j = 1; j < q.cols(); ++j)
            if (q(i, j) > q(i, best)) best = j;
        labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return labels;
}

struct DecResult {
    nn::DenseStack encoder;
    ClusterState state;
    std::vector<int> labels;
    std::vector<int> initial_labels;  // k-means on the initial embedding
    int iterations = 0;
    std::vector<double> loss_history;  // mean KL per sample at each target update
    std::vector<double> label_change;  // fraction changed at each target update after the first
};

namespace detail {

inline double changed_fraction(const std::vector<int>& a, const std::vector<int>& b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += a[i] != b[i];
    return a.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(a.size());
}

}  // namespace detail

/// Self-training: centroids start from k-means on the initial embedding;
/// every `target_update_interval` steps P is recomputed from the full data
/// and training stops once fewer than `stop_tolerance` of the labels change
/// between consecutive updates. Each step moves encoder weights and
/// centroids down the batch-mean KL gradient.
inline DecResult dec_train(const nn::DenseStack& encoder, const Matrix& rows, const DecConfig& cfg) {
    cfg.validate();
    if (rows.cols() != encoder.input_dim()) throw std::invalid_argument("dec_train: data/encoder dimension mismatch");
    const Index m = rows.rows();
    if (m < cfg.k) throw DataError("dec_train: fewer samples than clusters");

    DecResult res;
    res.encoder = encoder;
    const Matrix xt = rows.transpose();
    Matrix z = nn::predict(res.encoder, xt).transpose();
    const auto km = kmeans(z, cfg.k, derive_seed(cfg.seed, "dec.kmeans"), cfg.kmeans_restarts);
    Matrix u = km.centroids;
    res.initial_labels = km.labels;

    const Index batch = std::min(cfg.batch_size, m);
    const int interval = cfg.target_update_interval > 0
                             ? cfg.target_update_interval
                             : static_cast<int>((m + batch - 1) / batch);
    auto shuffle_rng = make_rng(cfg.seed, "dec.shuffle");
    std::vector<Index> order = iota_indices(m);
    std::size_t cursor = order.size();
    nn::Sgd opt(cfg.learning_rate);

    std::vector<int> previous = km.labels;
    Matrix p;
    bool first_update = true;
    auto divergence = [&](const std::string& what, int it) {
        std::ostringstream os;
        os << "DEC diverged (" << what << ") at iteration " << it << " with learning_rate " << cfg.learning_rate
           << "; centroid norms:";
        for (Index j = 0; j < u.rows(); ++j) os << ' ' << u.row(j).norm();
        throw DivergenceError(os.str());
    };

    int it = 0;
    for (; it < cfg.max_iterations; ++it) {
        if (it % interval == 0) {
            z = nn::predict(res.encoder, xt).transpose();
            const Matrix q = soft_assignment(z, u, cfg.alpha);
            if (!q.allFinite()) divergence("non-finite soft assignment", it);
            p = target_distribution(q);
            const double loss = kl_divergence(p, q) / static_cast<double>(m);
            if (!std::isfinite(loss)) divergence("non-finite KL loss", it);
            res.loss_history.push_back(loss);
            auto labels = hard_assignment(q);
            if (!first_update) {
                const double frac = detail::changed_fraction(labels, previous);
                res.label_change.push_back(frac);
                if (frac < cfg.stop_tolerance) break;
            }
            first_update = false;
            previous = std::move(labels);
        }
        if (cursor >= order.size()) {
            shuffle_in_place(order, shuffle_rng);
            cursor = 0;
        }
        const std::size_t end = std::min(order.size(), cursor + static_cast<std::size_t>(batch));
        Matrix xb(xt.rows(), static_cast<Index>(end - cursor));
        Matrix pb(static_cast<Index>(end - cursor), p.cols());
        for (std::size_t i = cursor; i < end; ++i) {
            xb.col(static_cast<Index>(i - cursor)) = xt.col(order[i]);
            pb.row(static_cast<Index>(i - cursor)) = p.row(order[i]);
        }
        cursor = end;
        const double inv_b = 1.0 / static_cast<double>(xb.cols());
        const auto cache = nn::forward(res.encoder, xb);
        const Matrix zb = cache.output.transpose();
        const auto g = kl_gradients(zb, u, pb, cfg.alpha);
        if (!g.embeddings.allFinite() || !g.centroids.allFinite()) divergence("non-finite gradient", it);
        opt.step(res.encoder, nn::backward(res.encoder, cache, (g.embeddings * inv_b).transpose()));
        u -= cfg.learning_rate * inv_b * g.centroids;
    }
    res.iterations = it;

    z = nn::predict(res.encoder, xt).transpose();
    res.state.centroids = u;
    res.state.alpha = cfg.alpha;
    res.state.q = soft_assignment(z, u, cfg.alpha);
    if (!res.state.q.allFinite()) divergence("non-finite final soft assignment", it);
    res.state.p = target_distribution(res.state.q);
    res.labels = hard_assignment(res.state.q);
    return res;
}

inline nlohmann::json to_json(const ClusterState& s) {
    nlohmann::json j;
    j["format"] = "gridres.cluster_state";
    j["version"] = 1;
    j["k"] = s.k();
    j["alpha"] = s.alpha;
    j["centroids"] = nlohmann::json::array();
    for (Index r = 0; r < s.centroids.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(s.centroids.cols()));
        for (Index c = 0; c < s.centroids.cols(); ++c) row[static_cast<std::size_t>(c)] = s.centroids(r, c);
        j["centroids"].push_back(row);
    }
    return j;
}

}  // namespace gridres::dec
