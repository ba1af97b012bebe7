#pragma once

#include "gridres/csv.hpp"
#include "gridres/features/features.hpp"

#include <filesystem>
#include <sstream>
#include <string>

namespace gridres::features {

inline std::string rf_to_csv(const ResilienceFeatureMatrix& rf) {
    std::ostringstream os;
    os << "cell_id";
    for (const auto& f : kSchema) os << ',' << f.name;
    os << '\n';
    for (Index i = 0; i < rf.rows(); ++i) {
        os << rf.cell_ids[static_cast<std::size_t>(i)];
        for (Index j = 0; j < rf.values.cols(); ++j) os << ',' << format_double(rf.values(i, j));
        os << '\n';
    }
    return os.str();
}

inline std::string mask_to_csv(const ResilienceFeatureMatrix& rf) {
    std::ostringstream os;
    os << "cell_id";
    for (const auto& f : kSchema) os << ',' << f.name;
    os << '\n';
    for (Index i = 0; i < rf.rows(); ++i) {
        os << rf.cell_ids[static_cast<std::size_t>(i)];
        for (Index j = 0; j < rf.imputed.cols(); ++j) os << ',' << rf.imputed(i, j);
        os << '\n';
    }
    return os.str();
}

inline void write_rf(const ResilienceFeatureMatrix& rf, const std::filesystem::path& csv_path,
                     const std::filesystem::path& mask_path) {
    write_text_file(csv_path, rf_to_csv(rf));
    write_text_file(mask_path, mask_to_csv(rf));
}

/// Reads a feature CSV; the mask file is optional.
inline ResilienceFeatureMatrix read_rf(const std::filesystem::path& csv_path,
                                       const std::filesystem::path& mask_path = {}) {
    const auto t = read_csv(csv_path);
    if (t.header.size() != kFeatureCount + 1 || t.header[0] != "cell_id")
        throw DataError("'" + csv_path.string() + "' does not have the feature matrix header");
    for (std::size_t j = 0; j < kFeatureCount; ++j)
        if (t.header[j + 1] != kSchema[j].name)
            throw DataError("'" + csv_path.string() + "' column " + std::to_string(j + 1) + " should be '" +
                            std::string(kSchema[j].name) + "'");
    std::vector<int> ids;
    Matrix v(static_cast<Index>(t.rows.size()), static_cast<Index>(kFeatureCount));
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ids.push_back(static_cast<int>(parse_int(t.rows[r][0], csv_path)));
        for (std::size_t j = 0; j < kFeatureCount; ++j)
            v(static_cast<Index>(r), static_cast<Index>(j)) = parse_double(t.rows[r][j + 1], csv_path);
    }
    auto rf = ResilienceFeatureMatrix::with_schema_transforms(std::move(ids), std::move(v));
    if (!mask_path.empty() && std::filesystem::exists(mask_path)) {
        const auto m = read_csv(mask_path);
        if (m.rows.size() != t.rows.size()) throw DataError("mask row count does not match feature matrix");
        for (std::size_t r = 0; r < m.rows.size(); ++r)
            for (std::size_t j = 0; j < kFeatureCount; ++j)
                rf.imputed(static_cast<Index>(r), static_cast<Index>(j)) =
                    static_cast<int>(parse_int(m.rows[r][j + 1], mask_path));
    }
    rf.validate();
    return rf;
}

}  // namespace gridres::features
