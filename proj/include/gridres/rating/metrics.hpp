#pragma once

// Classifier fidelity metrics and clustering agreement / quality scores.

#include "gridres/common.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gridres::rating {

struct MetricsReport {
    double precision_macro = 0.0;
    double recall_macro = 0.0;
    double f1_macro = 0.0;
    double precision_micro = 0.0;
    double recall_micro = 0.0;
    double f1_micro = 0.0;
    double accuracy = 0.0;
    double auc_macro = 0.0;
    Eigen::MatrixXi confusion;  // truth x predicted
    std::vector<int> evaluated_classes;
    std::vector<std::string> warnings;
};

namespace detail {

/// Area under the ROC curve as the Mann-Whitney rank statistic, ties
/// receiving average ranks.
inline std::optional<double> binary_auc(const std::vector<double>& scores, const std::vector<bool>& positive) {
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (bool b : positive) n_pos += b;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && scores[idx[j + 1]] == scores[idx[i]]) ++j;
        const double avg_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t t = i; t <= j; ++t)
            if (positive[idx[t]]) rank_sum += avg_rank;
        i = j + 1;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

}  // namespace detail

/// Macro and micro precision/recall/F1 plus macro one-vs-rest AUC.
/// `scores` holds one row per sample and one column per class (0..k-1).
/// Classes absent from `truth` are left out of the macro averages.
inline MetricsReport classification_metrics(const std::vector<int>& truth, const std::vector<int>& predicted,
                                            const Matrix& scores) {
    if (truth.size() != predicted.size() || static_cast<Index>(truth.size()) != scores.rows())
        throw std::invalid_argument("classification_metrics: length mismatch");
    if (truth.empty()) throw std::invalid_argument("classification_metrics: no samples");
    const int k = static_cast<int>(scores.cols());
    for (std::size_t i = 0; i < truth.size(); ++i)
        if (truth[i] < 0 || truth[i] >= k || predicted[i] < 0 || predicted[i] >= k)
            throw std::invalid_argument("classification_metrics: label outside the score columns");

    MetricsReport r;
    r.confusion = Eigen::MatrixXi::Zero(k, k);
    for (std::size_t i = 0; i < truth.size(); ++i) ++r.confusion(truth[i], predicted[i]);

    const double n = static_cast<double>(truth.size());
    double correct = 0.0;
    for (int c = 0; c < k; ++c) correct += r.confusion(c, c);
    r.accuracy = correct / n;
    r.precision_micro = r.recall_micro = r.f1_micro = r.accuracy;

    double sp = 0.0, sr = 0.0, sf = 0.0, sauc = 0.0;
    int n_auc = 0;
    for (int c = 0; c < k; ++c) {
        const double support = r.confusion.row(c).sum();
        if (support == 0) {
            r.warnings.push_back("class " + std::to_string(c) + " absent from truth; excluded from macro averages");
            continue;
        }
        r.evaluated_classes.push_back(c);
        const double tp = r.confusion(c, c);
        const double pred_c = r.confusion.col(c).sum();
        const double prec = pred_c > 0 ? tp / pred_c : 0.0;
        const double rec = tp / support;
        const double f1 = (prec + rec) > 0 ? 2.0 * prec * rec / (prec + rec) : 0.0;
        sp += prec;
        sr += rec;
        sf += f1;
        std::vector<double> s(truth.size());
        std::vector<bool> pos(truth.size());
        for (std::size_t i = 0; i < truth.size(); ++i) {
            s[i] = scores(static_cast<Index>(i), c);
            pos[i] = truth[i] == c;
        }
        if (auto auc = detail::binary_auc(s, pos)) {
            sauc += *auc;
            ++n_auc;
        }
    }
    const double ne = static_cast<double>(r.evaluated_classes.size());
    r.precision_macro = sp / ne;
    r.recall_macro = sr / ne;
    r.f1_macro = sf / ne;
    r.auc_macro = n_auc > 0 ? sauc / n_auc : std::numeric_limits<double>::quiet_NaN();
    for (const auto& w : r.warnings) warn(w);
    return r;
}

/// Adjusted Rand index between two labelings.
inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand_index: length mismatch");
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1.0;
        ca[a[i]] += 1.0;
        cb[b[i]] += 1.0;
    }
    auto c2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double sum_joint = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [k, v] : joint) sum_joint += c2(v);
    for (const auto& [k, v] : ca) sum_a += c2(v);
    for (const auto& [k, v] : cb) sum_b += c2(v);
    const double total = c2(static_cast<double>(a.size()));
    const double expected = total > 0 ? sum_a * sum_b / total : 0.0;
    const double max_index = (sum_a + sum_b) / 2.0;
    if (max_index == expected) return 1.0;
    return (sum_joint - expected) / (max_index - expected);
}

/// Mean silhouette width; nothing when fewer than two clusters are used.
/// Samples in singleton clusters score 0.
inline std::optional<double> silhouette_score(const Matrix& x, const std::vector<int>& labels) {
    const Index m = x.rows();
    if (static_cast<Index>(labels.size()) != m) throw std::invalid_argument("silhouette_score: length mismatch");
    std::map<int, Index> sizes;
    for (int l : labels) ++sizes[l];
    if (sizes.size() < 2) return std::nullopt;
    std::map<int, int> slot;
    for (const auto& [l, s] : sizes) slot.emplace(l, static_cast<int>(slot.size()));
    const int k = static_cast<int>(sizes.size());
    std::vector<Index> count(static_cast<std::size_t>(k));
    for (const auto& [l, s] : sizes) count[static_cast<std::size_t>(slot[l])] = s;

    // Pairwise distances through the Gram matrix.
    const Vector sq = x.rowwise().squaredNorm();
    const Matrix gram = x * x.transpose();
    double total = 0.0;
    std::vector<double> sums(static_cast<std::size_t>(k));
    for (Index i = 0; i < m; ++i) {
        std::fill(sums.begin(), sums.end(), 0.0);
        for (Index j = 0; j < m; ++j) {
            if (i == j) continue;
            const double d = std::sqrt(std::max(0.0, sq[i] + sq[j] - 2.0 * gram(i, j)));
            sums[static_cast<std::size_t>(slot[labels[static_cast<std::size_t>(j)]])] += d;
        }
        const int own = slot[labels[static_cast<std::size_t>(i)]];
        const Index own_n = count[static_cast<std::size_t>(own)];
        if (own_n <= 1) continue;
        const double a = sums[static_cast<std::size_t>(own)] / static_cast<double>(own_n - 1);
        double b = kInf;
        for (int c = 0; c < k; ++c)
            if (c != own) b = std::min(b, sums[static_cast<std::size_t>(c)] / static_cast<double>(count[static_cast<std::size_t>(c)]));
        const double den = std::max(a, b);
        total += den > 0.0 ? (b - a) / den : 0.0;
    }
    return total / static_cast<double>(m);
}

}  // namespace gridres::rating
