#pragma once

#include "gridres/nn/dense.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

namespace gridres::nn {

inline constexpr int kWeightFormatVersion = 1;

/// Versioned text form: layer dims, activations and row-major weights.
inline nlohmann::json to_json(const DenseStack& stack, std::uint64_t seed) {
    nlohmann::json j;
    j["format"] = "gridres.dense_stack";
    j["version"] = kWeightFormatVersion;
    j["seed"] = seed;
    j["layers"] = nlohmann::json::array();
    for (const auto& L : stack.layers) {
        nlohmann::json lj;
        lj["in"] = L.in_dim();
        lj["out"] = L.out_dim();
        lj["activation"] = activation_name(L.activation);
        std::vector<double> w;
        w.reserve(static_cast<std::size_t>(L.weights.size()));
        for (Index r = 0; r < L.weights.rows(); ++r)
            for (Index c = 0; c < L.weights.cols(); ++c) w.push_back(L.weights(r, c));
        lj["weights"] = std::move(w);
        lj["bias"] = std::vector<double>(L.bias.data(), L.bias.data() + L.bias.size());
        j["layers"].push_back(std::move(lj));
    }
    return j;
}

inline DenseStack from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gridres.dense_stack") throw DataError("not a dense stack weight file");
    if (j.value("version", 0) != kWeightFormatVersion)
        throw DataError("unsupported weight file version " + std::to_string(j.value("version", 0)));
    std::vector<DenseLayer> layers;
    for (const auto& lj : j.at("layers")) {
        const Index in = lj.at("in").get<Index>();
        const Index out = lj.at("out").get<Index>();
        const auto w = lj.at("weights").get<std::vector<double>>();
        const auto b = lj.at("bias").get<std::vector<double>>();
        if (static_cast<Index>(w.size()) != in * out || static_cast<Index>(b.size()) != out)
            throw DataError("weight file layer has inconsistent sizes");
        DenseLayer L{Matrix(out, in), Vector(out), parse_activation(lj.at("activation").get<std::string>())};
        for (Index r = 0; r < out; ++r)
            for (Index c = 0; c < in; ++c) L.weights(r, c) = w[static_cast<std::size_t>(r * in + c)];
        for (Index r = 0; r < out; ++r) L.bias[r] = b[static_cast<std::size_t>(r)];
        layers.push_back(std::move(L));
    }
    try {
        return DenseStack(std::move(layers));
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("weight file: ") + e.what());
    }
}

inline void save_stack(const DenseStack& stack, std::uint64_t seed, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_json(stack, seed).dump() << '\n';
}

inline DenseStack load_stack(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return from_json(nlohmann::json::parse(in));
}

}  // namespace gridres::nn
