#pragma once

// CART random forest: Gini splits, bootstrap rows, random feature subsets
// per split, mean-decrease-in-impurity importances.

#include "gridres/common.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

namespace gridres::rating {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;  // x[feature] <= threshold goes left
    int left = -1;
    int right = -1;
    std::vector<double> class_counts;  // weighted by bootstrap multiplicity

    bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
    std::vector<TreeNode> nodes;  // nodes[0] is the root
    Vector importance;            // raw impurity decrease per feature

    const TreeNode& leaf_for(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
        const TreeNode* n = &nodes[0];
        while (!n->is_leaf()) n = &nodes[static_cast<std::size_t>(x[n->feature] <= n->threshold ? n->left : n->right)];
        return *n;
    }
    int depth() const;
};

struct ForestConfig {
    int n_trees = 200;
    bool bootstrap = true;
    int max_features = 0;  // 0 = floor(sqrt(d))
    int min_samples_leaf = 1;
    int max_depth = 0;  // 0 = unlimited
    std::uint64_t seed = 0;

    void validate() const {
        if (n_trees < 1) throw ConfigError("forest n_trees must be >= 1");
        if (max_features < 0) throw ConfigError("forest max_features must be >= 0");
        if (min_samples_leaf < 1) throw ConfigError("forest min_samples_leaf must be >= 1");
        if (max_depth < 0) throw ConfigError("forest max_depth must be >= 0");
    }
};

struct ForestModel {
    int n_classes = 0;
    int n_features = 0;
    std::uint64_t seed = 0;
    std::vector<DecisionTree> trees;
    Vector importances;  // sums to 1

    int n_trees() const { return static_cast<int>(trees.size()); }

    /// Mean of per-tree leaf class frequencies; one row per sample.
    Matrix predict_proba(const Matrix& x) const {
        if (x.cols() != n_features) throw std::invalid_argument("predict_proba: feature count mismatch");
        Matrix out = Matrix::Zero(x.rows(), n_classes);
        for (const auto& t : trees) {
            for (Index i = 0; i < x.rows(); ++i) {
                const auto& leaf = t.leaf_for(x.row(i));
                double total = 0.0;
                for (double c : leaf.class_counts) total += c;
                for (int c = 0; c < n_classes; ++c)
                    out(i, c) += leaf.class_counts[static_cast<std::size_t>(c)] / total;
            }
        }
        return out / static_cast<double>(trees.size());
    }

    std::vector<int> predict(const Matrix& x) const {
        const Matrix p = predict_proba(x);
        std::vector<int> y(static_cast<std::size_t>(x.rows()));
        for (Index i = 0; i < p.rows(); ++i) {
            Index best = 0;
            for (Index c = 1; c < p.cols(); ++c)
                if (p(i, c) > p(i, best)) best = c;
            y[static_cast<std::size_t>(i)] = static_cast<int>(best);
        }
        return y;
    }
};

inline int DecisionTree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        auto [id, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        const auto& n = nodes[static_cast<std::size_t>(id)];
        if (!n.is_leaf()) {
            stack.push_back({n.left, d + 1});
            stack.push_back({n.right, d + 1});
        }
    }
    return best;
}

namespace detail {

inline double gini(const std::vector<double>& counts, double total) {
    if (total <= 0.0) return 0.0;
    double s = 0.0;
    for (double c : counts) s += (c / total) * (c / total);
    return 1.0 - s;
}

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = -kInf;  // weighted impurity decrease
    std::size_t n_left = 0;  // entries of the sorted range going left
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, const std::vector<int>& y, int n_classes, const ForestConfig& cfg, Rng& rng)
        : x_(x), y_(y), k_(n_classes), cfg_(cfg), rng_(rng) {
        const int d = static_cast<int>(x.cols());
        mtry_ = cfg.max_features > 0 ? std::min(cfg.max_features, d)
                                     : std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(d)))));
    }

    /// `samples` lists row indices, repeated once per bootstrap draw.
    DecisionTree build(std::vector<Index> samples) {
        tree_ = DecisionTree{};
        tree_.importance = Vector::Zero(x_.cols());
        root_weight_ = static_cast<double>(samples.size());
        grow(samples, 0, samples.size(), 0);
        return std::move(tree_);
    }

private:
    std::vector<double> counts(const std::vector<Index>& s, std::size_t b, std::size_t e) const {
        std::vector<double> c(static_cast<std::size_t>(k_), 0.0);
        for (std::size_t i = b; i < e; ++i) c[static_cast<std::size_t>(y_[static_cast<std::size_t>(s[i])])] += 1.0;
        return c;
    }

    SplitChoice best_split_on(std::vector<Index>& s, std::size_t b, std::size_t e, int f,
                              const std::vector<double>& parent) const {
        std::sort(s.begin() + static_cast<std::ptrdiff_t>(b), s.begin() + static_cast<std::ptrdiff_t>(e),
                  [&](Index a, Index c) { return x_(a, f) < x_(c, f) || (x_(a, f) == x_(c, f) && a < c); });
        const double n = static_cast<double>(e - b);
        const double parent_imp = n * gini(parent, n);
        std::vector<double> left(static_cast<std::size_t>(k_), 0.0);
        SplitChoice best;
        const std::size_t min_leaf = static_cast<std::size_t>(cfg_.min_samples_leaf);
        for (std::size_t i = b; i + 1 < e; ++i) {
            left[static_cast<std::size_t>(y_[static_cast<std::size_t>(s[i])])] += 1.0;
            const double v = x_(s[i], f);
            const double v_next = x_(s[i + 1], f);
            if (v == v_next) continue;
            const std::size_t nl = i + 1 - b;
            if (nl < min_leaf || (e - b) - nl < min_leaf) continue;
            std::vector<double> right(parent);
            for (std::size_t c = 0; c < right.size(); ++c) right[c] -= left[c];
            const double wl = static_cast<double>(nl);
            const double wr = n - wl;
            const double gain = parent_imp - wl * gini(left, wl) - wr * gini(right, wr);
            if (gain > best.gain) {
                best.feature = f;
                best.gain = gain;
                best.n_left = nl;
                best.threshold = v + (v_next - v) / 2.0;
                if (!(best.threshold < v_next)) best.threshold = v;  // guard midpoint rounding
            }
        }
        return best;
    }

    int grow(std::vector<Index>& s, std::size_t b, std::size_t e, int depth) {
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.emplace_back();
        const auto parent = counts(s, b, e);
        tree_.nodes[static_cast<std::size_t>(id)].class_counts = parent;
        const double n = static_cast<double>(e - b);
        const bool pure = gini(parent, n) <= 0.0;
        const bool depth_cap = cfg_.max_depth > 0 && depth >= cfg_.max_depth;
        if (pure || depth_cap || e - b < 2 * static_cast<std::size_t>(cfg_.min_samples_leaf)) return id;

        // Draw features in random order; the first mtry are candidates, the
        // rest are only visited when none of those admits a split.
        std::vector<int> features(static_cast<std::size_t>(x_.cols()));
        for (std::size_t f = 0; f < features.size(); ++f) features[f] = static_cast<int>(f);
        shuffle_in_place(features, rng_);
        SplitChoice best;
        for (std::size_t i = 0; i < features.size(); ++i) {
            if (static_cast<int>(i) >= mtry_ && best.feature >= 0) break;
            auto cand = best_split_on(s, b, e, features[i], parent);
            if (cand.feature >= 0 && cand.gain > best.gain) best = cand;
        }
        if (best.feature < 0) return id;

        std::sort(s.begin() + static_cast<std::ptrdiff_t>(b), s.begin() + static_cast<std::ptrdiff_t>(e),
                  [&](Index a, Index c) {
                      const double xa = x_(a, best.feature), xc = x_(c, best.feature);
                      return xa < xc || (xa == xc && a < c);
                  });
        const std::size_t mid = b + best.n_left;
        tree_.importance[best.feature] += std::max(0.0, best.gain) / root_weight_;
        const int l = grow(s, b, mid, depth + 1);
        const int r = grow(s, mid, e, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    const Matrix& x_;
    const std::vector<int>& y_;
    int k_;
    const ForestConfig& cfg_;
    Rng& rng_;
    int mtry_ = 1;
    double root_weight_ = 1.0;
    DecisionTree tree_;
};

}  // namespace detail

/// Rows of `x` are samples; labels lie in 0..n_classes-1. n_classes = 0
/// infers max label + 1. Tree t draws from stream ("forest.tree", t).
inline ForestModel fit_forest(const Matrix& x, const std::vector<int>& labels, const ForestConfig& cfg,
                              int n_classes = 0) {
    cfg.validate();
    if (static_cast<Index>(labels.size()) != x.rows()) throw std::invalid_argument("fit_forest: label count mismatch");
    if (x.rows() == 0) throw DataError("fit_forest: no samples");
    if (!x.allFinite()) throw DataError("fit_forest: non-finite feature values");
    int k = 0;
    std::vector<int> seen;
    for (int l : labels) {
        if (l < 0) throw std::invalid_argument("fit_forest: negative label");
        k = std::max(k, l + 1);
        if (std::find(seen.begin(), seen.end(), l) == seen.end()) seen.push_back(l);
    }
    if (seen.size() < 2) throw DataError("fit_forest: labels contain a single class");
    if (n_classes > 0) {
        if (k > n_classes) throw std::invalid_argument("fit_forest: label exceeds n_classes");
        k = n_classes;
    }

    ForestModel model;
    model.n_classes = k;
    model.n_features = static_cast<int>(x.cols());
    model.seed = cfg.seed;
    model.importances = Vector::Zero(x.cols());
    const Index m = x.rows();
    for (int t = 0; t < cfg.n_trees; ++t) {
        auto rng = make_rng(cfg.seed, "forest.tree", static_cast<std::uint64_t>(t));
        std::vector<Index> samples(static_cast<std::size_t>(m));
        if (cfg.bootstrap) {
            for (auto& s : samples) s = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(m)));
            std::sort(samples.begin(), samples.end());
        } else {
            samples = iota_indices(m);
        }
        detail::TreeBuilder builder(x, labels, k, cfg, rng);
        auto tree = builder.build(std::move(samples));
        const double s = tree.importance.sum();
        if (s > 0.0) model.importances += tree.importance / s;
        model.trees.push_back(std::move(tree));
    }
    const double total = model.importances.sum();
    if (total > 0.0)
        model.importances /= total;
    else
        model.importances.setConstant(1.0 / static_cast<double>(x.cols()));
    return model;
}

/// Normalised mean decrease in Gini impurity.
inline const Vector& feature_importances(const ForestModel& f) { return f.importances; }

inline nlohmann::json to_json(const ForestModel& f) {
    nlohmann::json j;
    j["format"] = "gridres.forest";
    j["version"] = 1;
    j["n_classes"] = f.n_classes;
    j["n_features"] = f.n_features;
    j["seed"] = f.seed;
    j["importances"] = std::vector<double>(f.importances.data(), f.importances.data() + f.importances.size());
    j["trees"] = nlohmann::json::array();
    for (const auto& t : f.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            if (n.is_leaf())
                nodes.push_back({{"counts", n.class_counts}});
            else
                nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
        }
        j["trees"].push_back(std::move(nodes));
    }
    return j;
}

}  // namespace gridres::rating
