#pragma once

// Dense feedforward stack with explicit forward/backward passes, inverted
// dropout and plain SGD. Batches are stored one sample per column.

#include "gridres/common.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gridres::nn {

enum class Activation { Identity, Relu };

inline std::string_view activation_name(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }

inline Activation parse_activation(std::string_view s) {
    if (s == "relu") return Activation::Relu;
    if (s == "identity" || s == "linear") return Activation::Identity;
    throw DataError("unknown activation '" + std::string(s) + "'");
}

struct DenseLayer {
    Matrix weights;  // out x in
    Vector bias;     // out
    Activation activation = Activation::Identity;

    Index in_dim() const { return weights.cols(); }
    Index out_dim() const { return weights.rows(); }
};

class DenseStack {
public:
    std::vector<DenseLayer> layers;

    DenseStack() = default;
    explicit DenseStack(std::vector<DenseLayer> ls) : layers(std::move(ls)) { validate(); }

    /// Uniform weights in +-1/sqrt(fan_in), zero biases.
    static DenseStack random(const std::vector<Index>& dims, const std::vector<Activation>& acts, Rng& rng) {
        if (dims.size() < 2 || acts.size() != dims.size() - 1)
            throw std::invalid_argument("DenseStack::random: need dims.size() - 1 activations");
        std::vector<DenseLayer> ls;
        for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(dims[l]));
            DenseLayer layer{Matrix(dims[l + 1], dims[l]), Vector::Zero(dims[l + 1]), acts[l]};
            for (Index c = 0; c < layer.weights.cols(); ++c)
                for (Index r = 0; r < layer.weights.rows(); ++r)
                    layer.weights(r, c) = (2.0 * uniform01(rng) - 1.0) * bound;
            ls.push_back(std::move(layer));
        }
        return DenseStack(std::move(ls));
    }

    void validate() const {
        for (std::size_t l = 0; l < layers.size(); ++l) {
            const auto& L = layers[l];
            if (L.bias.size() != L.out_dim())
                throw std::invalid_argument("layer " + std::to_string(l) + ": bias size does not match output dim");
            if (l + 1 < layers.size() && layers[l + 1].in_dim() != L.out_dim())
                throw std::invalid_argument("layer " + std::to_string(l + 1) + ": input dim does not match previous output");
            if (!L.weights.allFinite() || !L.bias.allFinite())
                throw std::invalid_argument("layer " + std::to_string(l) + ": non-finite parameters");
        }
    }

    Index input_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
    Index output_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }
    std::vector<Index> dims() const {
        std::vector<Index> d;
        if (layers.empty()) return d;
        d.push_back(input_dim());
        for (const auto& l : layers) d.push_back(l.out_dim());
        return d;
    }
    Index parameter_count() const {
        Index n = 0;
        for (const auto& l : layers) n += l.weights.size() + l.bias.size();
        return n;
    }

    /// Bumped by every parameter update; caches from older versions are stale.
    std::uint64_t version() const { return version_; }
    void touch() { ++version_; }

private:
    std::uint64_t version_ = 0;
};

/// Per-layer multiplicative masks applied to that layer's input. An empty
/// optional leaves the input untouched.
using DropoutMasks = std::vector<std::optional<Matrix>>;

struct ForwardCache {
    std::vector<Matrix> inputs;  // masked input seen by each layer
    std::vector<Matrix> pre;     // pre-activations
    DropoutMasks masks;
    Matrix output;
    const DenseStack* owner = nullptr;
    std::uint64_t version = 0;
};

inline void apply_activation(Activation a, Matrix& z) {
    if (a == Activation::Relu) z = z.cwiseMax(0.0);
}

/// Forward pass over a batch `x` (input_dim x n).
inline ForwardCache forward(const DenseStack& stack, const Matrix& x, const DropoutMasks* masks = nullptr) {
    if (stack.layers.empty()) throw std::invalid_argument("forward: empty stack");
    if (x.rows() != stack.input_dim())
        throw std::invalid_argument("forward: input has " + std::to_string(x.rows()) + " rows, stack expects " +
                                    std::to_string(stack.input_dim()));
    if (masks && masks->size() != stack.layers.size())
        throw std::invalid_argument("forward: need one (optional) mask per layer");
    ForwardCache cache;
    cache.owner = &stack;
    cache.version = stack.version();
    cache.inputs.reserve(stack.layers.size());
    cache.pre.reserve(stack.layers.size());
    if (masks) cache.masks = *masks;
    else cache.masks.assign(stack.layers.size(), std::nullopt);

    Matrix a = x;
    for (std::size_t l = 0; l < stack.layers.size(); ++l) {
        const auto& L = stack.layers[l];
        if (const auto& m = cache.masks[l]) {
            if (m->rows() != a.rows() || m->cols() != a.cols())
                throw std::invalid_argument("forward: dropout mask shape mismatch at layer " + std::to_string(l));
            a = a.cwiseProduct(*m);
        }
        Matrix z = L.weights * a;
        z.colwise() += L.bias;
        cache.inputs.push_back(std::move(a));
        cache.pre.push_back(z);
        apply_activation(L.activation, z);
        a = std::move(z);
    }
    cache.output = std::move(a);
    return cache;
}

/// Inference without caches or masks.
inline Matrix predict(const DenseStack& stack, const Matrix& x) {
    if (x.rows() != stack.input_dim()) throw std::invalid_argument("predict: input dimension mismatch");
    Matrix a = x;
    for (const auto& L : stack.layers) {
        Matrix z = L.weights * a;
        z.colwise() += L.bias;
        apply_activation(L.activation, z);
        a = std::move(z);
    }
    return a;
}

struct Gradients {
    std::vector<Matrix> weights;
    std::vector<Vector> bias;
    Matrix input;  // d loss / d x (before the first mask)

    static Gradients zeros_like(const DenseStack& s) {
        Gradients g;
        for (const auto& l : s.layers) {
            g.weights.push_back(Matrix::Zero(l.weights.rows(), l.weights.cols()));
            g.bias.push_back(Vector::Zero(l.bias.size()));
        }
        return g;
    }
};

/// Backpropagate `loss_grad` (d loss / d output, same shape as the output).
/// The relu derivative at exactly zero is taken as zero.
inline Gradients backward(const DenseStack& stack, const ForwardCache& cache, const Matrix& loss_grad) {
    if (cache.owner != &stack || cache.version != stack.version())
        throw std::logic_error("backward: stale forward cache");
    if (loss_grad.rows() != cache.output.rows() || loss_grad.cols() != cache.output.cols())
        throw std::invalid_argument("backward: loss gradient shape mismatch");
    const std::size_t n = stack.layers.size();
    Gradients g;
    g.weights.resize(n);
    g.bias.resize(n);
    Matrix delta = loss_grad;
    for (std::size_t li = n; li-- > 0;) {
        const auto& L = stack.layers[li];
        if (L.activation == Activation::Relu)
            delta = delta.cwiseProduct((cache.pre[li].array() > 0.0).cast<double>().matrix());
        g.weights[li].noalias() = delta * cache.inputs[li].transpose();
        g.bias[li] = delta.rowwise().sum();
        Matrix up = L.weights.transpose() * delta;
        if (const auto& m = cache.masks[li]) up = up.cwiseProduct(*m);
        delta = std::move(up);
    }
    g.input = std::move(delta);
    return g;
}

/// Inverted-dropout mask: each entry is 0 with probability `rate`, else
/// 1 / (1 - rate). Draws run column by column.
inline Matrix dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("dropout rate must be in [0, 1)");
    Matrix m(rows, cols);
    if (rate == 0.0) {
        m.setOnes();
        return m;
    }
    const double keep = 1.0 / (1.0 - rate);
    for (Index c = 0; c < cols; ++c)
        for (Index r = 0; r < rows; ++r) m(r, c) = uniform01(rng) < rate ? 0.0 : keep;
    return m;
}

inline Vector dropout_mask(Index dim, double rate, Rng& rng) { return dropout_mask(dim, 1, rate, rng).col(0); }

/// Mean over the batch of the squared L2 reconstruction error.
inline double mse_loss(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse_loss: shape mismatch");
    if (pred.cols() == 0) return 0.0;
    return (pred - target).squaredNorm() / static_cast<double>(pred.cols());
}

inline Matrix mse_grad(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw std::invalid_argument("mse_grad: shape mismatch");
    return 2.0 * (pred - target) / static_cast<double>(pred.cols());
}

/// theta <- theta - lr * grad, optionally with classical momentum.
class Sgd {
public:
    explicit Sgd(double learning_rate, double momentum = 0.0) : lr_(learning_rate), momentum_(momentum) {
        if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw std::invalid_argument("momentum must be in [0, 1)");
    }

    void step(DenseStack& stack, const Gradients& g) {
        check_shapes(stack, g);
        if (momentum_ == 0.0) {
            for (std::size_t l = 0; l < stack.layers.size(); ++l) {
                stack.layers[l].weights -= lr_ * g.weights[l];
                stack.layers[l].bias -= lr_ * g.bias[l];
            }
        } else {
            if (velocity_.weights.size() != stack.layers.size()) velocity_ = Gradients::zeros_like(stack);
            for (std::size_t l = 0; l < stack.layers.size(); ++l) {
                velocity_.weights[l] = momentum_ * velocity_.weights[l] - lr_ * g.weights[l];
                velocity_.bias[l] = momentum_ * velocity_.bias[l] - lr_ * g.bias[l];
                stack.layers[l].weights += velocity_.weights[l];
                stack.layers[l].bias += velocity_.bias[l];
            }
        }
        stack.touch();
    }

    double learning_rate() const { return lr_; }

private:
    static void check_shapes(const DenseStack& stack, const Gradients& g) {
        if (g.weights.size() != stack.layers.size() || g.bias.size() != stack.layers.size())
            throw std::invalid_argument("sgd_step: gradient layer count mismatch");
        for (std::size_t l = 0; l < stack.layers.size(); ++l) {
            if (g.weights[l].rows() != stack.layers[l].weights.rows() ||
                g.weights[l].cols() != stack.layers[l].weights.cols() ||
                g.bias[l].size() != stack.layers[l].bias.size())
                throw std::invalid_argument("sgd_step: gradient shape mismatch at layer " + std::to_string(l));
        }
    }

    double lr_;
    double momentum_;
    Gradients velocity_;
};

inline void sgd_step(DenseStack& stack, const Gradients& g, double learning_rate) {
    Sgd(learning_rate).step(stack, g);
}

}  // namespace gridres::nn
