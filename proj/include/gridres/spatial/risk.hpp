#pragma once

// Joint flood-risk / resilience categories.

#include "gridres/common.hpp"

#include <string>
#include <vector>

namespace gridres::spatial {

enum class RiskBand { Low, Medium, High };
enum class ResilienceBand { Poor, Medium, Good };

struct RiskResilienceLabel {
    RiskBand risk = RiskBand::Low;
    ResilienceBand resilience = ResilienceBand::Poor;

    /// high-poor, high-medium and medium-poor need special attention.
    bool flagged() const {
        return (risk == RiskBand::High && resilience != ResilienceBand::Good) ||
               (risk == RiskBand::Medium && resilience == ResilienceBand::Poor);
    }

    std::string name() const {
        static const char* r[] = {"low", "medium", "high"};
        static const char* s[] = {"poor", "medium", "good"};
        return std::string(r[static_cast<int>(risk)]) + "-" + s[static_cast<int>(resilience)];
    }

    bool operator==(const RiskResilienceLabel&) const = default;
};

/// Risk 1-2 low, 3-4 medium, 5-6 high; resilience 1-2 poor, 3 medium, 4-5 good.
inline RiskResilienceLabel classify_risk_resilience(int risk, int resilience, int cell_id = -1) {
    const std::string where = cell_id >= 0 ? " at cell " + std::to_string(cell_id) : "";
    if (risk < 1 || risk > 6) throw DataError("flood risk level " + std::to_string(risk) + where + " outside 1..6");
    if (resilience < 1 || resilience > 5)
        throw DataError("resilience level " + std::to_string(resilience) + where + " outside 1..5");
    RiskResilienceLabel l;
    l.risk = risk <= 2 ? RiskBand::Low : (risk <= 4 ? RiskBand::Medium : RiskBand::High);
    l.resilience = resilience <= 2 ? ResilienceBand::Poor : (resilience == 3 ? ResilienceBand::Medium : ResilienceBand::Good);
    return l;
}

inline std::vector<RiskResilienceLabel> combine_risk_resilience(const std::vector<int>& risk,
                                                                const std::vector<int>& resilience,
                                                                const std::vector<int>& cell_ids = {}) {
    if (risk.size() != resilience.size()) throw std::invalid_argument("combine_risk_resilience: length mismatch");
    if (!cell_ids.empty() && cell_ids.size() != risk.size())
        throw std::invalid_argument("combine_risk_resilience: cell id count mismatch");
    std::vector<RiskResilienceLabel> out;
    out.reserve(risk.size());
    for (std::size_t i = 0; i < risk.size(); ++i)
        out.push_back(classify_risk_resilience(risk[i], resilience[i],
                                               cell_ids.empty() ? static_cast<int>(i) : cell_ids[i]));
    return out;
}

}  // namespace gridres::spatial
