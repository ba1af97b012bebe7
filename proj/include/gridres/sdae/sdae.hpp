#pragma once

// Stacked denoising autoencoder: greedy layer-wise pretraining of denoising
// sub-autoencoders, stacking into a deep autoencoder, fine-tuning, encoding.

#include "gridres/csv.hpp"
#include "gridres/nn/dense.hpp"
#include "gridres/nn/serialize.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace gridres::sdae {

/// SquaredNorm is the batch mean of ||x - y||^2. PerElement divides it by
/// the reconstructed width, which keeps the step size of a fixed learning
/// rate comparable across layers of very different widths.
enum class ReconstructionLoss { SquaredNorm, PerElement };

struct TrainConfig {
    double learning_rate = 0.1;
    Index batch_size = 256;
    int epochs = 200;
    double dropout_rate = 0.2;
    double momentum = 0.0;
    ReconstructionLoss loss = ReconstructionLoss::PerElement;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
        if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("dropout_rate must be in [0, 1)");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
    }
};

struct SdaeConfig {
    std::vector<Index> hidden{500, 500, 2000};
    Index embedding_dim = 10;
    TrainConfig train;
    int finetune_epochs = 200;

    /// d_in, hidden..., d_e
    std::vector<Index> dims(Index d_in) const {
        std::vector<Index> d{d_in};
        d.insert(d.end(), hidden.begin(), hidden.end());
        d.push_back(embedding_dim);
        return d;
    }
};

/// One denoising autoencoder: layer 0 encodes, layer 1 decodes.
struct SubAutoencoder {
    nn::DenseStack net;
    std::vector<double> loss_history;  // mean training loss per epoch
};

struct SdaeModel {
    nn::DenseStack encoder;
    nn::DenseStack decoder;
    std::vector<std::vector<double>> pretrain_history;
    std::vector<double> finetune_history;
    double finetune_initial_loss = 0.0;
    TrainConfig config;

    /// Encoder layers followed by decoder layers.
    nn::DenseStack autoencoder() const {
        std::vector<nn::DenseLayer> ls = encoder.layers;
        ls.insert(ls.end(), decoder.layers.begin(), decoder.layers.end());
        return nn::DenseStack(std::move(ls));
    }

    Index embedding_dim() const { return encoder.output_dim(); }
};

namespace detail {

inline Matrix gather_columns(const Matrix& x, const std::vector<Index>& idx, std::size_t begin, std::size_t end) {
    Matrix out(x.rows(), static_cast<Index>(end - begin));
    for (std::size_t i = begin; i < end; ++i) out.col(static_cast<Index>(i - begin)) = x.col(idx[i]);
    return out;
}

inline double loss_scale(const TrainConfig& cfg, Index width) {
    return cfg.loss == ReconstructionLoss::PerElement ? 1.0 / static_cast<double>(width) : 1.0;
}

inline void check_finite_loss(double loss, const std::string& stage, int epoch, const TrainConfig& cfg) {
    if (std::isfinite(loss)) return;
    std::ostringstream os;
    os << stage << ": reconstruction loss became non-finite at epoch " << epoch + 1 << " (learning_rate "
       << cfg.learning_rate << "); lower the learning rate or check the input scaling";
    throw DivergenceError(os.str());
}

/// Mini-batch SGD on squared reconstruction error of `target` from `input`
/// (both one sample per column). When `dropout` is positive each layer
/// input is corrupted with a fresh mask. Returns per-epoch mean losses.
inline std::vector<double> train_reconstruction(nn::DenseStack& net, const Matrix& input, const Matrix& target,
                                                const TrainConfig& cfg, int epochs, double dropout,
                                                Rng& shuffle_rng, Rng& dropout_rng, const std::string& stage) {
    nn::Sgd opt(cfg.learning_rate, cfg.momentum);
    const Index m = input.cols();
    std::vector<Index> order = iota_indices(m);
    std::vector<double> history;
    history.reserve(static_cast<std::size_t>(epochs));
    for (int epoch = 0; epoch < epochs; ++epoch) {
        shuffle_in_place(order, shuffle_rng);
        double total = 0.0;
        for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
            const Matrix xb = gather_columns(input, order, b, e);
            const Matrix tb = gather_columns(target, order, b, e);
            nn::ForwardCache cache;
            if (dropout > 0.0) {
                nn::DropoutMasks masks;
                Index rows = xb.rows();
                for (const auto& L : net.layers) {
                    masks.emplace_back(nn::dropout_mask(rows, xb.cols(), dropout, dropout_rng));
                    rows = L.out_dim();
                }
                cache = nn::forward(net, xb, &masks);
            } else {
                cache = nn::forward(net, xb);
            }
            const double scale = loss_scale(cfg, tb.rows());
            const double loss = scale * nn::mse_loss(cache.output, tb);
            check_finite_loss(loss, stage, epoch, cfg);
            total += loss * static_cast<double>(e - b);
            opt.step(net, nn::backward(net, cache, scale * nn::mse_grad(cache.output, tb)));
        }
        history.push_back(total / static_cast<double>(m));
    }
    return history;
}

}  // namespace detail

/// Greedy layer-wise pretraining. `rows` is the min-max scaled feature
/// matrix (one cell per row); `dims` = d_in, hidden..., d_e. Sub-autoencoder
/// k corrupts its input and its hidden code with dropout and reconstructs
/// the clean input; its clean encoder output feeds sub-autoencoder k + 1.
inline std::vector<SubAutoencoder> pretrain_layerwise(const Matrix& rows, const TrainConfig& cfg,
                                                      const std::vector<Index>& dims) {
    cfg.validate();
    if (dims.size() < 2) throw std::invalid_argument("pretrain_layerwise: need at least input and embedding dims");
    if (rows.cols() != dims.front())
        throw std::invalid_argument("pretrain_layerwise: data has " + std::to_string(rows.cols()) +
                                    " columns, dims start at " + std::to_string(dims.front()));
    for (Index d : dims)
        if (d < 1) throw std::invalid_argument("pretrain_layerwise: dims must be positive");
    if (!rows.allFinite()) throw DataError("pretrain_layerwise: non-finite input");

    std::vector<SubAutoencoder> subs;
    Matrix x = rows.transpose();
    const std::size_t K = dims.size() - 1;
    for (std::size_t k = 0; k < K; ++k) {
        auto init_rng = make_rng(cfg.seed, "sdae.pretrain.init", k);
        auto shuffle_rng = make_rng(cfg.seed, "sdae.pretrain.shuffle", k);
        auto dropout_rng = make_rng(cfg.seed, "sdae.pretrain.dropout", k);
        const nn::Activation enc_act = (k + 1 == K) ? nn::Activation::Identity : nn::Activation::Relu;
        SubAutoencoder sub{nn::DenseStack::random({dims[k], dims[k + 1], dims[k]}, {enc_act, nn::Activation::Relu},
                                                  init_rng),
                           {}};
        sub.loss_history = detail::train_reconstruction(sub.net, x, x, cfg, cfg.epochs, cfg.dropout_rate, shuffle_rng,
                                                        dropout_rng, "pretrain layer " + std::to_string(k + 1));
        // Clean encoder output feeds the next sub-autoencoder.
        nn::DenseStack enc({sub.net.layers[0]});
        x = nn::predict(enc, x);
        subs.push_back(std::move(sub));
    }
    return subs;
}

/// Concatenate encoders in order and decoders in reverse order, then
/// fine-tune the deep autoencoder on clean inputs without dropout.
inline SdaeModel stack_and_finetune(const std::vector<SubAutoencoder>& subs, const Matrix& rows,
                                    const TrainConfig& cfg, int epochs) {
    cfg.validate();
    if (subs.empty()) throw std::invalid_argument("stack_and_finetune: no sub-autoencoders");
    std::vector<nn::DenseLayer> enc, dec;
    for (const auto& s : subs) {
        if (s.net.layers.size() != 2) throw std::invalid_argument("stack_and_finetune: malformed sub-autoencoder");
        enc.push_back(s.net.layers[0]);
    }
    for (std::size_t k = subs.size(); k-- > 0;) dec.push_back(subs[k].net.layers[1]);
    SdaeModel model;
    try {
        model.encoder = nn::DenseStack(std::move(enc));
        model.decoder = nn::DenseStack(std::move(dec));
        if (model.encoder.output_dim() != model.decoder.input_dim())
            throw std::invalid_argument("encoder output does not match decoder input");
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(std::string("stack_and_finetune: dim chain mismatch: ") + e.what());
    }
    if (rows.cols() != model.encoder.input_dim())
        throw std::invalid_argument("stack_and_finetune: data column count does not match the encoder");
    for (const auto& s : subs) model.pretrain_history.push_back(s.loss_history);
    model.config = cfg;

    const Matrix x = rows.transpose();
    nn::DenseStack ae = model.autoencoder();
    model.finetune_initial_loss = detail::loss_scale(cfg, x.rows()) * nn::mse_loss(nn::predict(ae, x), x);
    if (epochs > 0) {
        auto shuffle_rng = make_rng(cfg.seed, "sdae.finetune.shuffle");
        auto unused = make_rng(cfg.seed, "sdae.finetune.dropout");
        model.finetune_history = detail::train_reconstruction(ae, x, x, cfg, epochs, 0.0, shuffle_rng, unused, "fine-tune");
        const std::size_t ne = model.encoder.layers.size();
        std::vector<nn::DenseLayer> e(ae.layers.begin(), ae.layers.begin() + static_cast<std::ptrdiff_t>(ne));
        std::vector<nn::DenseLayer> d(ae.layers.begin() + static_cast<std::ptrdiff_t>(ne), ae.layers.end());
        model.encoder = nn::DenseStack(std::move(e));
        model.decoder = nn::DenseStack(std::move(d));
    }
    return model;
}

/// Embeddings (one row per input row), no dropout.
inline Matrix encode(const nn::DenseStack& encoder, const Matrix& rows) {
    if (rows.cols() != encoder.input_dim())
        throw std::invalid_argument("encode: data has " + std::to_string(rows.cols()) + " columns, encoder expects " +
                                    std::to_string(encoder.input_dim()));
    return nn::predict(encoder, rows.transpose()).transpose();
}

inline Matrix encode(const SdaeModel& model, const Matrix& rows) { return encode(model.encoder, rows); }

inline SdaeModel train_sdae(const Matrix& rows, const SdaeConfig& cfg) {
    const auto dims = cfg.dims(rows.cols());
    return stack_and_finetune(pretrain_layerwise(rows, cfg.train, dims), rows, cfg.train, cfg.finetune_epochs);
}

// ---------------------------------------------------------------------------
// Persistence: weight files plus a manifest and a loss-history CSV.

inline void save_model(const SdaeModel& model, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    nn::save_stack(model.encoder, model.config.seed, dir / "encoder.json");
    nn::save_stack(model.decoder, model.config.seed, dir / "decoder.json");
    nlohmann::json m;
    m["format"] = "gridres.sdae_manifest";
    m["version"] = 1;
    m["dims"] = model.encoder.dims();
    m["embedding_dim"] = model.embedding_dim();
    m["seed"] = model.config.seed;
    m["epochs"] = model.config.epochs;
    m["finetune_epochs"] = model.finetune_history.size();
    m["learning_rate"] = model.config.learning_rate;
    m["batch_size"] = model.config.batch_size;
    m["dropout_rate"] = model.config.dropout_rate;
    m["finetune_initial_loss"] = model.finetune_initial_loss;
    write_text_file(dir / "sdae_manifest.json", m.dump(2) + "\n");

    std::ostringstream os;
    os << "stage,epoch,loss\n";
    for (std::size_t k = 0; k < model.pretrain_history.size(); ++k)
        for (std::size_t e = 0; e < model.pretrain_history[k].size(); ++e)
            os << "pretrain_" << k + 1 << ',' << e + 1 << ',' << format_double(model.pretrain_history[k][e]) << '\n';
    for (std::size_t e = 0; e < model.finetune_history.size(); ++e)
        os << "finetune," << e + 1 << ',' << format_double(model.finetune_history[e]) << '\n';
    write_text_file(dir / "loss_history.csv", os.str());
}

inline SdaeModel load_model(const std::filesystem::path& dir) {
    SdaeModel model;
    model.encoder = nn::load_stack(dir / "encoder.json");
    model.decoder = nn::load_stack(dir / "decoder.json");
    std::ifstream in(dir / "sdae_manifest.json");
    if (!in) throw DataError("missing SDAE manifest in '" + dir.string() + "'");
    const auto m = nlohmann::json::parse(in);
    model.config.seed = m.at("seed").get<std::uint64_t>();
    model.config.epochs = m.at("epochs").get<int>();
    model.config.learning_rate = m.at("learning_rate").get<double>();
    model.config.batch_size = m.at("batch_size").get<Index>();
    model.config.dropout_rate = m.at("dropout_rate").get<double>();
    model.finetune_initial_loss = m.value("finetune_initial_loss", 0.0);
    return model;
}

}  // namespace gridres::sdae
