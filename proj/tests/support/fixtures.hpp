#pragma once

// Shared test fixtures: planted clusters, warning capture, scratch dirs.

#include "gridres/common.hpp"
#include "gridres/rating/pipeline.hpp"

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

namespace gridres::testing {

struct Planted {
    Matrix x;  // m x d
    std::vector<int> truth;
};

/// k Gaussian blobs in d dimensions: centres uniform in [0, 10]^d, a fixed
/// isotropic spread, labels assigned round-robin then shuffled.
inline Planted planted_blobs(Index m, Index d, int k, std::uint64_t seed, double spread = 0.6) {
    auto rng = make_rng(seed, "fixture.blobs");
    Matrix centres(k, d);
    for (int j = 0; j < k; ++j)
        for (Index c = 0; c < d; ++c) centres(j, c) = 10.0 * uniform01(rng);
    Planted p;
    p.x.resize(m, d);
    p.truth.resize(static_cast<std::size_t>(m));
    std::vector<Index> order = iota_indices(m);
    shuffle_in_place(order, rng);
    for (Index i = 0; i < m; ++i) {
        const int label = static_cast<int>(order[static_cast<std::size_t>(i)] % k);
        p.truth[static_cast<std::size_t>(i)] = label;
        for (Index c = 0; c < d; ++c) p.x(i, c) = centres(label, c) + spread * standard_normal(rng);
    }
    return p;
}

/// Adjusted Rand index by direct pair counting, O(m^2).
inline double pair_counting_ari(const std::vector<int>& a, const std::vector<int>& b) {
    double n11 = 0, n10 = 0, n01 = 0, n00 = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j];
            const bool sb = b[i] == b[j];
            if (sa && sb) ++n11;
            else if (sa) ++n10;
            else if (sb) ++n01;
            else ++n00;
        }
    }
    const double den = (n00 + n01) * (n01 + n11) + (n00 + n10) * (n10 + n11);
    if (den == 0.0) return 1.0;
    return 2.0 * (n00 * n11 - n01 * n10) / den;
}

/// Column-wise min-max scaling to [0, 1]; constant columns become 0.
inline Matrix unit_scale(const Matrix& x) {
    Matrix out(x.rows(), x.cols());
    for (Index c = 0; c < x.cols(); ++c) {
        const double lo = x.col(c).minCoeff();
        const double span = x.col(c).maxCoeff() - lo;
        for (Index r = 0; r < x.rows(); ++r) out(r, c) = span > 0.0 ? (x(r, c) - lo) / span : 0.0;
    }
    return out;
}

/// Pipeline settings for the m = 2000 acceptance fixture: reduced hidden
/// widths so the 16-config search fits the time budget.
inline rating::PipelineConfig blob_pipeline_config(std::uint64_t seed) {
    rating::PipelineConfig cfg;
    cfg.seed = seed;
    cfg.sdae.hidden = {32, 32, 64};
    cfg.sdae.train.epochs = 200;
    cfg.sdae.finetune_epochs = 200;
    return cfg;
}

/// Collects warnings for the lifetime of the object.
class WarningCapture {
public:
    WarningCapture() : previous_(warning_sink()) {
        warning_sink() = [this](std::string_view m) { messages.emplace_back(m); };
    }
    ~WarningCapture() { warning_sink() = previous_; }
    WarningCapture(const WarningCapture&) = delete;
    WarningCapture& operator=(const WarningCapture&) = delete;

    bool contains(std::string_view needle) const {
        for (const auto& m : messages)
            if (m.find(needle) != std::string::npos) return true;
        return false;
    }

    std::vector<std::string> messages;

private:
    WarningSink previous_;
};

/// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& tag) {
        path_ = std::filesystem::temp_directory_path() /
                ("gridres_" + tag + "_" + std::to_string(fnv1a64(tag) ^ static_cast<std::uint64_t>(::getpid())));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~ScratchDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace gridres::testing
