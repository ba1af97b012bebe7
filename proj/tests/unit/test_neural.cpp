#include "gridres/nn/dense.hpp"
#include "gridres/nn/serialize.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gridres;
using namespace gridres::nn;

namespace {

// Straight-line forward pass over one sample, loops only.
std::vector<double> loop_forward(const DenseStack& s, std::vector<double> x) {
    for (const auto& L : s.layers) {
        std::vector<double> y(static_cast<std::size_t>(L.out_dim()), 0.0);
        for (Index r = 0; r < L.out_dim(); ++r) {
            double acc = L.bias[r];
            for (Index c = 0; c < L.in_dim(); ++c) acc += L.weights(r, c) * x[static_cast<std::size_t>(c)];
            if (L.activation == Activation::Relu && acc < 0.0) acc = 0.0;
            y[static_cast<std::size_t>(r)] = acc;
        }
        x = std::move(y);
    }
    return x;
}

Matrix random_matrix(Index r, Index c, Rng& rng) {
    Matrix m(r, c);
    for (Index j = 0; j < c; ++j)
        for (Index i = 0; i < r; ++i) m(i, j) = 2.0 * uniform01(rng) - 1.0;
    return m;
}

double loss_of(const DenseStack& s, const Matrix& x, const Matrix& y, const DropoutMasks* masks) {
    return mse_loss(forward(s, x, masks).output, y);
}

// Max relative error of analytic vs central-difference gradients.
double gradient_check(DenseStack s, const Matrix& x, const Matrix& y, const DropoutMasks* masks) {
    const auto cache = forward(s, x, masks);
    const auto g = backward(s, cache, mse_grad(cache.output, y));
    const double eps = 1e-5;
    double worst = 0.0;
    auto compare = [&](double analytic, double numeric) {
        const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
        worst = std::max(worst, std::abs(analytic - numeric) / denom);
    };
    for (std::size_t l = 0; l < s.layers.size(); ++l) {
        for (Index i = 0; i < s.layers[l].weights.size(); ++i) {
            double& w = s.layers[l].weights.data()[i];
            const double keep = w;
            w = keep + eps;
            const double up = loss_of(s, x, y, masks);
            w = keep - eps;
            const double down = loss_of(s, x, y, masks);
            w = keep;
            compare(g.weights[l].data()[i], (up - down) / (2 * eps));
        }
        for (Index i = 0; i < s.layers[l].bias.size(); ++i) {
            double& b = s.layers[l].bias[i];
            const double keep = b;
            b = keep + eps;
            const double up = loss_of(s, x, y, masks);
            b = keep - eps;
            const double down = loss_of(s, x, y, masks);
            b = keep;
            compare(g.bias[l][i], (up - down) / (2 * eps));
        }
    }
    return worst;
}

}  // namespace

TEST(Forward, ZeroWeightsGiveBias) {
    DenseStack s({DenseLayer{Matrix::Zero(3, 2), (Vector(3) << 1, -2, 3).finished(), Activation::Identity}});
    const Matrix x = (Matrix(2, 1) << 5, 7).finished();
    EXPECT_TRUE(forward(s, x).output.col(0).isApprox(s.layers[0].bias));
}

TEST(Forward, ReluClamp) {
    DenseStack s({DenseLayer{Matrix::Identity(2, 2), Vector::Zero(2), Activation::Relu}});
    const Matrix out = forward(s, (Matrix(2, 1) << 1, -1).finished()).output;
    EXPECT_EQ(out(0, 0), 1.0);
    EXPECT_EQ(out(1, 0), 0.0);
}

TEST(Forward, MatchesLoopOracle) {
    auto rng = make_rng(1, "test.forward");
    const auto s = DenseStack::random({3, 4, 2}, {Activation::Relu, Activation::Identity}, rng);
    const Matrix x = random_matrix(3, 10, rng);
    const Matrix out = forward(s, x).output;
    const Matrix pred = predict(s, x);
    for (Index c = 0; c < x.cols(); ++c) {
        const auto want = loop_forward(s, {x(0, c), x(1, c), x(2, c)});
        for (Index r = 0; r < 2; ++r) {
            EXPECT_NEAR(out(r, c), want[static_cast<std::size_t>(r)], 1e-12);
            EXPECT_NEAR(pred(r, c), want[static_cast<std::size_t>(r)], 1e-12);
        }
    }
}

TEST(Forward, DimensionMismatchRejected) {
    auto rng = make_rng(1, "test.forward.dim");
    const auto s = DenseStack::random({3, 2}, {Activation::Identity}, rng);
    EXPECT_THROW(forward(s, Matrix::Zero(4, 1)), std::invalid_argument);
    EXPECT_THROW(DenseStack({DenseLayer{Matrix::Zero(2, 3), Vector::Zero(2), Activation::Identity},
                             DenseLayer{Matrix::Zero(2, 4), Vector::Zero(2), Activation::Identity}}),
                 std::invalid_argument);
}

TEST(Backward, ZeroLossGradientGivesZeroGradients) {
    auto rng = make_rng(2, "test.backward.zero");
    const auto s = DenseStack::random({3, 5, 2}, {Activation::Relu, Activation::Identity}, rng);
    const auto cache = forward(s, random_matrix(3, 4, rng));
    const auto g = backward(s, cache, Matrix::Zero(2, 4));
    for (std::size_t l = 0; l < 2; ++l) {
        EXPECT_TRUE(g.weights[l].isZero(0.0));
        EXPECT_TRUE(g.bias[l].isZero(0.0));
    }
}

TEST(Backward, LinearLayerClosedForm) {
    auto rng = make_rng(3, "test.backward.linear");
    const auto s = DenseStack::random({4, 3}, {Activation::Identity}, rng);
    const Matrix x = random_matrix(4, 1, rng);
    const Matrix y = random_matrix(3, 1, rng);
    const auto cache = forward(s, x);
    const auto g = backward(s, cache, mse_grad(cache.output, y));
    const Matrix want = 2.0 * (cache.output - y) * x.transpose();
    EXPECT_TRUE(g.weights[0].isApprox(want, 1e-12));
    EXPECT_TRUE(g.bias[0].isApprox(2.0 * (cache.output - y).col(0), 1e-12));
}

TEST(Backward, StaleCacheRejected) {
    auto rng = make_rng(4, "test.backward.stale");
    auto s = DenseStack::random({2, 2}, {Activation::Identity}, rng);
    const auto cache = forward(s, random_matrix(2, 3, rng));
    const auto g = backward(s, cache, Matrix::Ones(2, 3));
    sgd_step(s, g, 0.1);
    EXPECT_THROW(backward(s, cache, Matrix::Ones(2, 3)), std::logic_error);
}

TEST(Backward, FiniteDifferenceAgreement) {
    auto rng = make_rng(5, "test.gradcheck");
    for (int trial = 0; trial < 25; ++trial) {
        // At most 50 parameters: 3-4-3-2 has 16 + 15 + 8 = 39.
        auto s = DenseStack::random({3, 4, 3, 2}, {Activation::Relu, Activation::Relu, Activation::Identity}, rng);
        // Nonzero biases keep pre-activations off the relu kink at exactly 0.
        for (auto& l : s.layers) l.bias = random_matrix(l.bias.size(), 1, rng).col(0) * 0.1;
        const Matrix x = random_matrix(3, 6, rng);
        const Matrix y = random_matrix(2, 6, rng);
        EXPECT_LE(gradient_check(s, x, y, nullptr), 1e-4) << "trial " << trial;
    }
}

TEST(Backward, FiniteDifferenceAgreementWithMasks) {
    auto rng = make_rng(6, "test.gradcheck.masks");
    for (int trial = 0; trial < 10; ++trial) {
        const auto s = DenseStack::random({4, 5, 4}, {Activation::Relu, Activation::Identity}, rng);
        const Matrix x = random_matrix(4, 5, rng);
        const Matrix y = random_matrix(4, 5, rng);
        DropoutMasks masks{dropout_mask(4, 5, 0.2, rng), dropout_mask(5, 5, 0.2, rng)};
        EXPECT_LE(gradient_check(s, x, y, &masks), 1e-4);
    }
}

TEST(Dropout, RateZeroIsIdentity) {
    auto rng = make_rng(7, "test.dropout0");
    EXPECT_TRUE(dropout_mask(10, 20, 0.0, rng).isOnes(0.0));
}

TEST(Dropout, ZeroFractionAndScaling) {
    auto rng = make_rng(8, "test.dropout.mc");
    const Vector m = dropout_mask(1000000, 0.2, rng);
    Index zeros = 0;
    for (Index i = 0; i < m.size(); ++i) {
        if (m[i] == 0.0) ++zeros;
        else ASSERT_DOUBLE_EQ(m[i], 1.25);
    }
    EXPECT_NEAR(static_cast<double>(zeros) / 1e6, 0.2, 0.003);
}

TEST(Dropout, DeterministicPerSeedAndRejectsRateOne) {
    auto a = make_rng(9, "test.dropout.det");
    auto b = make_rng(9, "test.dropout.det");
    EXPECT_TRUE(dropout_mask(30, 7, 0.3, a).cwiseEqual(dropout_mask(30, 7, 0.3, b)).all());
    EXPECT_THROW(dropout_mask(3, 0.999999 + 1e-6, a), std::invalid_argument);
    EXPECT_THROW(dropout_mask(3, -0.1, a), std::invalid_argument);
}

TEST(Sgd, ScalarStepAndZeroGradient) {
    DenseStack s({DenseLayer{Matrix::Constant(1, 1, 1.0), Vector::Zero(1), Activation::Identity}});
    auto g = Gradients::zeros_like(s);
    sgd_step(s, g, 0.1);
    EXPECT_EQ(s.layers[0].weights(0, 0), 1.0);
    g.weights[0](0, 0) = 0.5;
    sgd_step(s, g, 0.1);
    EXPECT_DOUBLE_EQ(s.layers[0].weights(0, 0), 0.95);
}

TEST(Sgd, ShapeMismatchRejected) {
    DenseStack s({DenseLayer{Matrix::Zero(2, 2), Vector::Zero(2), Activation::Identity}});
    Gradients g;
    g.weights = {Matrix::Zero(3, 2)};
    g.bias = {Vector::Zero(2)};
    EXPECT_THROW(sgd_step(s, g, 0.1), std::invalid_argument);
    EXPECT_THROW(mse_loss(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), std::invalid_argument);
}

TEST(Sgd, SmallStepDecreasesQuadraticLoss) {
    auto rng = make_rng(10, "test.sgd.decrease");
    for (int trial = 0; trial < 20; ++trial) {
        auto s = DenseStack::random({5, 3}, {Activation::Identity}, rng);
        const Matrix x = random_matrix(5, 8, rng);
        const Matrix y = random_matrix(3, 8, rng);
        const auto cache = forward(s, x);
        const double before = mse_loss(cache.output, y);
        sgd_step(s, backward(s, cache, mse_grad(cache.output, y)), 1e-3);
        EXPECT_LT(loss_of(s, x, y, nullptr), before);
    }
}

TEST(Sgd, DeterministicTraining) {
    auto run = [] {
        auto rng = make_rng(11, "test.sgd.det");
        auto s = DenseStack::random({4, 6, 4}, {Activation::Relu, Activation::Identity}, rng);
        const Matrix x = random_matrix(4, 16, rng);
        for (int step = 0; step < 50; ++step) {
            DropoutMasks masks{dropout_mask(4, 16, 0.2, rng), std::nullopt};
            const auto cache = forward(s, x, &masks);
            sgd_step(s, backward(s, cache, mse_grad(cache.output, x)), 0.05);
        }
        return s;
    };
    const auto a = run();
    const auto b = run();
    for (std::size_t l = 0; l < a.layers.size(); ++l) {
        EXPECT_TRUE(a.layers[l].weights.cwiseEqual(b.layers[l].weights).all());
        EXPECT_TRUE(a.layers[l].bias.cwiseEqual(b.layers[l].bias).all());
    }
}

TEST(Sgd, LinearAutoencoderLearnsOneDimensionalSubspace) {
    auto rng = make_rng(12, "test.linear.ae");
    const Vector dir = (Vector(3) << 0.6, 0.0, 0.8).finished();
    Matrix x(3, 64);
    for (Index c = 0; c < x.cols(); ++c) x.col(c) = (2.0 * uniform01(rng) - 1.0) * dir;
    auto s = DenseStack::random({3, 1, 3}, {Activation::Identity, Activation::Identity}, rng);
    const double initial = loss_of(s, x, x, nullptr);
    for (int epoch = 0; epoch < 200; ++epoch) {
        for (Index start = 0; start < x.cols(); start += 8) {
            const Matrix batch = x.middleCols(start, 8);
            const auto cache = forward(s, batch);
            sgd_step(s, backward(s, cache, mse_grad(cache.output, batch)), 0.1);
        }
    }
    EXPECT_LT(loss_of(s, x, x, nullptr), 1e-3 * initial);
}

TEST(Serialize, RoundTripReproducesOutputs) {
    auto rng = make_rng(13, "test.serialize");
    const auto s = DenseStack::random({6, 5, 3}, {Activation::Relu, Activation::Identity}, rng);
    gridres::testing::ScratchDir dir("serialize");
    save_stack(s, 99, dir.path() / "w.json");
    const auto back = load_stack(dir.path() / "w.json");
    ASSERT_EQ(back.dims(), s.dims());
    const Matrix x = random_matrix(6, 20, rng);
    EXPECT_LE((predict(back, x) - predict(s, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.layers[0].activation, Activation::Relu);
    EXPECT_EQ(to_json(s, 99)["seed"], 99);
}
