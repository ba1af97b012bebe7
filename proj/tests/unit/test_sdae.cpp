#include "gridres/sdae/sdae.hpp"
#include "support/fixtures.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace gridres;
using namespace gridres::sdae;

namespace {

// m x 12 rows in [0, 1] spanning a rank-4 affine subspace.
Matrix rank_four_rows(Index m, std::uint64_t seed) {
    auto rng = make_rng(seed, "test.rank4");
    Matrix basis(4, 12);
    for (Index i = 0; i < 4; ++i)
        for (Index j = 0; j < 12; ++j) basis(i, j) = uniform01(rng);
    Matrix x(m, 12);
    for (Index r = 0; r < m; ++r) {
        Vector w(4);
        for (Index i = 0; i < 4; ++i) w[i] = uniform01(rng);
        x.row(r) = (w.transpose() * basis) / 4.0;
    }
    return x;
}

TrainConfig small_train(int epochs, std::uint64_t seed = 3) {
    TrainConfig t;
    t.epochs = epochs;
    t.seed = seed;
    return t;
}

}  // namespace

TEST(Pretrain, ShallowLossDecreases) {
    // 2-D inputs with a 2-D code: the single sub-autoencoder improves over a
    // windowed comparison of early and late epochs.
    auto rng = make_rng(1, "test.shallow");
    Matrix x(300, 2);
    for (Index r = 0; r < x.rows(); ++r) x.row(r) << uniform01(rng), uniform01(rng);
    const auto subs = pretrain_layerwise(x, small_train(100), {2, 2});
    ASSERT_EQ(subs.size(), 1u);
    const auto& h = subs[0].loss_history;
    const double early = (h[0] + h[1] + h[2] + h[3] + h[4]) / 5.0;
    const double late = (h[95] + h[96] + h[97] + h[98] + h[99]) / 5.0;
    EXPECT_LT(late, early);
}

TEST(Pretrain, RankFourDataEveryLayerImproves) {
    const Matrix x = rank_four_rows(2000, 7);
    const auto subs = pretrain_layerwise(x, small_train(200), {12, 32, 32, 64, 10});
    ASSERT_EQ(subs.size(), 4u);
    const auto& last = subs.back().loss_history;
    EXPECT_LE(last.back(), 0.5 * last.front());
    for (const auto& s : subs) EXPECT_LE(s.loss_history.back(), 0.8 * s.loss_history.front());
}

TEST(Pretrain, ZeroDropoutMatchesUnmaskedLoop) {
    // Independent loop: same init, shuffle stream and batch order, explicit
    // all-ones masks.
    const Matrix rows = rank_four_rows(300, 2);
    auto cfg = small_train(15, 5);
    cfg.dropout_rate = 0.0;
    cfg.batch_size = 64;
    const auto subs = pretrain_layerwise(rows, cfg, {12, 6});

    auto init_rng = make_rng(cfg.seed, "sdae.pretrain.init", 0);
    auto shuffle_rng = make_rng(cfg.seed, "sdae.pretrain.shuffle", 0);
    auto net = nn::DenseStack::random({12, 6, 12}, {nn::Activation::Identity, nn::Activation::Relu}, init_rng);
    const Matrix x = rows.transpose();
    std::vector<Index> order = iota_indices(x.cols());
    std::vector<double> history;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle_in_place(order, shuffle_rng);
        double total = 0.0;
        for (std::size_t b = 0; b < order.size(); b += 64) {
            const std::size_t e = std::min(order.size(), b + 64);
            Matrix xb(12, static_cast<Index>(e - b));
            for (std::size_t i = b; i < e; ++i) xb.col(static_cast<Index>(i - b)) = x.col(order[i]);
            nn::DropoutMasks ones{Matrix::Ones(12, xb.cols()), Matrix::Ones(6, xb.cols())};
            const auto cache = nn::forward(net, xb, &ones);
            const double loss = (1.0 / 12.0) * nn::mse_loss(cache.output, xb);
            total += loss * static_cast<double>(e - b);
            nn::sgd_step(net, nn::backward(net, cache, (1.0 / 12.0) * nn::mse_grad(cache.output, xb)), cfg.learning_rate);
        }
        history.push_back(total / static_cast<double>(x.cols()));
    }
    ASSERT_EQ(history.size(), subs[0].loss_history.size());
    for (std::size_t i = 0; i < history.size(); ++i) EXPECT_EQ(history[i], subs[0].loss_history[i]) << "epoch " << i;
}

TEST(Pretrain, RejectsBadInput) {
    EXPECT_THROW(pretrain_layerwise(Matrix::Zero(10, 3), small_train(1), {4, 2}), std::invalid_argument);
    auto bad = small_train(1);
    bad.dropout_rate = 1.0;
    EXPECT_THROW(pretrain_layerwise(Matrix::Zero(10, 3), bad, {3, 2}), ConfigError);
    // A single sub-autoencoder: with a relu hidden layer in between, a huge
    // step kills every unit and the loss settles at a finite value instead.
    auto huge = small_train(5);
    huge.learning_rate = 1e12;
    EXPECT_THROW(pretrain_layerwise(rank_four_rows(200, 1), huge, {12, 4}), DivergenceError);
}

TEST(Stack, PaperDimsAndMirror) {
    SdaeConfig cfg;
    cfg.train = small_train(0);
    cfg.finetune_epochs = 0;
    const Matrix x = rank_four_rows(20, 1);
    const auto model = train_sdae(x, cfg);
    EXPECT_EQ(model.encoder.dims(), (std::vector<Index>{12, 500, 500, 2000, 10}));
    auto mirrored = model.encoder.dims();
    std::reverse(mirrored.begin(), mirrored.end());
    EXPECT_EQ(model.decoder.dims(), mirrored);
    EXPECT_EQ(model.encoder.layers.back().activation, nn::Activation::Identity);
    for (std::size_t l = 0; l + 1 < model.encoder.layers.size(); ++l)
        EXPECT_EQ(model.encoder.layers[l].activation, nn::Activation::Relu);
}

TEST(Stack, ZeroFinetuneEpochsIsNoOp) {
    const Matrix x = rank_four_rows(200, 3);
    const auto subs = pretrain_layerwise(x, small_train(5), {12, 8, 8, 3});
    const auto model = stack_and_finetune(subs, x, small_train(5), 0);
    ASSERT_EQ(model.encoder.layers.size(), 3u);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_TRUE(model.encoder.layers[k].weights.cwiseEqual(subs[k].net.layers[0].weights).all());
        EXPECT_TRUE(model.decoder.layers[2 - k].weights.cwiseEqual(subs[k].net.layers[1].weights).all());
    }
    EXPECT_TRUE(model.finetune_history.empty());
}

TEST(Stack, MismatchedChainRejected) {
    const Matrix x = rank_four_rows(50, 4);
    auto a = pretrain_layerwise(x, small_train(1), {12, 8, 4});
    auto b = pretrain_layerwise(x, small_train(1), {12, 6, 4});
    std::vector<SubAutoencoder> mixed{a[0], b[1]};
    EXPECT_THROW(stack_and_finetune(mixed, x, small_train(1), 1), std::invalid_argument);
}

TEST(Finetune, LossNonIncreasingInMovingAverage) {
    const auto blobs = gridres::testing::planted_blobs(2000, 12, 5, 11);
    const Matrix x = gridres::testing::unit_scale(blobs.x);
    SdaeConfig cfg;
    cfg.hidden = {32, 32, 64};
    cfg.train = small_train(200, 11);
    cfg.finetune_epochs = 200;
    const auto model = train_sdae(x, cfg);
    const auto& h = model.finetune_history;
    ASSERT_EQ(h.size(), 200u);
    EXPECT_LE(h.back(), model.finetune_initial_loss);
    std::vector<double> avg;
    for (std::size_t i = 4; i < h.size(); ++i) avg.push_back((h[i] + h[i - 1] + h[i - 2] + h[i - 3] + h[i - 4]) / 5.0);
    for (std::size_t i = 1; i < avg.size(); ++i) EXPECT_LE(avg[i], avg[i - 1] * (1 + 1e-12)) << "window " << i;
}

TEST(Encode, DeterministicPureAndRowwise) {
    const Matrix x = rank_four_rows(100, 5);
    SdaeConfig cfg;
    cfg.hidden = {16, 16};
    cfg.embedding_dim = 3;
    cfg.train = small_train(5);
    cfg.finetune_epochs = 5;
    const auto model = train_sdae(x, cfg);
    const Matrix e1 = encode(model, x);
    const Matrix e2 = encode(model, x);
    EXPECT_TRUE(e1.cwiseEqual(e2).all());
    ASSERT_EQ(e1.rows(), 100);
    ASSERT_EQ(e1.cols(), 3);

    Matrix dup(2, 12);
    dup.row(0) = x.row(17);
    dup.row(1) = x.row(17);
    const Matrix ed = encode(model, dup);
    EXPECT_TRUE(ed.row(0).cwiseEqual(ed.row(1)).all());

    auto rng = make_rng(6, "test.encode.perm");
    std::vector<Index> perm = iota_indices(100);
    shuffle_in_place(perm, rng);
    Matrix xp(100, 12);
    for (Index i = 0; i < 100; ++i) xp.row(i) = x.row(perm[static_cast<std::size_t>(i)]);
    const Matrix ep = encode(model, xp);
    for (Index i = 0; i < 100; ++i)
        EXPECT_LE((ep.row(i) - e1.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff(), 1e-12);

    EXPECT_THROW(encode(model, Matrix::Zero(3, 11)), std::invalid_argument);
}

TEST(Encode, SeparatedClustersStaySeparated) {
    auto rng = make_rng(8, "test.encode.sep");
    Matrix x(400, 12);
    std::vector<int> label(400);
    for (Index r = 0; r < 400; ++r) {
        label[static_cast<std::size_t>(r)] = r % 2;
        const double base = r % 2 ? 0.8 : 0.2;
        for (Index c = 0; c < 12; ++c) x(r, c) = base + 0.05 * (2 * uniform01(rng) - 1);
    }
    SdaeConfig cfg;
    cfg.hidden = {32, 32, 64};
    cfg.train = small_train(50, 2);
    cfg.finetune_epochs = 50;
    const Matrix e = encode(train_sdae(x, cfg), x);
    Vector c0 = Vector::Zero(e.cols()), c1 = Vector::Zero(e.cols());
    for (Index r = 0; r < 400; ++r) (label[static_cast<std::size_t>(r)] ? c1 : c0) += e.row(r).transpose();
    c0 /= 200;
    c1 /= 200;
    double intra = 0.0;
    for (Index r = 0; r < 400; ++r)
        intra += (e.row(r).transpose() - (label[static_cast<std::size_t>(r)] ? c1 : c0)).norm();
    intra /= 400;
    EXPECT_GT((c0 - c1).norm(), intra);
}

TEST(Persistence, SaveLoadReproducesEncodings) {
    const Matrix x = rank_four_rows(60, 10);
    SdaeConfig cfg;
    cfg.hidden = {8};
    cfg.embedding_dim = 2;
    cfg.train = small_train(3, 42);
    cfg.finetune_epochs = 3;
    const auto model = train_sdae(x, cfg);
    gridres::testing::ScratchDir dir("sdae");
    save_model(model, dir.path());
    const auto back = load_model(dir.path());
    EXPECT_LE((encode(back, x) - encode(model, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_EQ(back.config.seed, 42u);
    EXPECT_TRUE(std::filesystem::exists(dir.path() / "loss_history.csv"));
}
