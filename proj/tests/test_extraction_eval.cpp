#include <gtest/gtest.h>

#include <random>
#include <set>

#include <lm3fe/extraction.hpp>
#include <lm3fe/evaluation.hpp>
#include <lm3fe/solver_w.hpp>
#include <lm3fe/synthetic.hpp>

#include "oracles.hpp"

using namespace lm3fe;

TEST(RankFeatures, OrdersByRowNorm)
{
    Model model;
    model.extraction = {Matrix(3, 2)};
    model.extraction[0] << 3, 4, 0, 0, 0, 3;
    const auto r = rank_features(model);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_EQ(r[0].order, (std::vector<Index>{0, 2, 1}));
    EXPECT_DOUBLE_EQ(r[0].scores(0), 5.0);
    EXPECT_DOUBLE_EQ(r[0].scores(2), 0.0);
}

TEST(RankFeatures, TiesKeepIndexOrder)
{
    Matrix u(4, 2);
    u << 1, 0, 0, 2, 0, 1, 2, 0;
    EXPECT_EQ(rank_rows(u).order, (std::vector<Index>{1, 3, 0, 2}));
}

TEST(RankFeatures, PermutationInvariantToScaling)
{
    std::mt19937_64 rng(81);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 20; ++trial) {
        Matrix u(15, 3);
        for (Index j = 0; j < 3; ++j)
            for (Index i = 0; i < 15; ++i) u(i, j) = normal(rng);
        const auto base = rank_rows(u);
        EXPECT_EQ(rank_rows(7.5 * u).order, base.order);
        EXPECT_EQ(rank_rows(1e-3 * u).order, base.order);
        std::set<Index> seen(base.order.begin(), base.order.end());
        EXPECT_EQ(seen.size(), 15u);
        for (Index i = 1; i < 15; ++i) EXPECT_GE(base.scores(i - 1), base.scores(i));
    }
}

TEST(SelectionCount, CeilingRule)
{
    EXPECT_EQ(selection_count(0.25, 10), 3);
    EXPECT_EQ(selection_count(0.3, 50), 15);
    EXPECT_EQ(selection_count(1.0, 7), 7);
    EXPECT_EQ(selection_count(0.01, 7), 1);
    EXPECT_THROW(selection_count(0.0, 7), ValueError);
    EXPECT_THROW(selection_count(1.2, 7), ValueError);
}

TEST(SelectFeatures, FullFractionEqualsConcatenation)
{
    std::mt19937_64 rng(82);
    const auto data = oracle::random_dataset(rng, 9, 2, {4, 3});
    const Model model = oracle::random_model(rng, data, 2);
    FeatureRanking identity(2);
    for (std::size_t v = 0; v < 2; ++v) {
        identity[v].order.resize(static_cast<std::size_t>(data.dim(v)));
        std::iota(identity[v].order.begin(), identity[v].order.end(), Index{0});
    }
    EXPECT_EQ(select_features(data, identity, {1.0, 1.0}), concatenated_features(data));
    const Matrix ranked = select_features(data, rank_features(model), {1.0, 1.0});
    EXPECT_EQ(ranked.cols(), 7);
}

TEST(SelectFeatures, MatchesDirectNormScan)
{
    SyntheticSpec spec;
    spec.samples = 30;
    spec.dims = {10, 8, 6};
    spec.informative = {3, 2, 2};
    spec.seed = 3;
    const auto syn = generate_synthetic(spec);
    std::mt19937_64 rng(83);
    const Model model = oracle::random_model(rng, syn.data, 5);
    const std::vector<double> fr{0.25, 0.5, 0.34};
    const Matrix sel = select_features(syn.data, rank_features(model), fr);
    Index col = 0;
    for (std::size_t v = 0; v < 3; ++v) {
        const Matrix& u = model.extraction[v];
        const Index k = selection_count(fr[v], u.rows());
        std::vector<bool> used(static_cast<std::size_t>(u.rows()), false);
        for (Index r = 0; r < k; ++r) {
            // Largest unused row norm, lowest index on ties.
            Index best = -1;
            for (Index i = 0; i < u.rows(); ++i)
                if (!used[static_cast<std::size_t>(i)] && (best < 0 || u.row(i).norm() > u.row(best).norm())) best = i;
            used[static_cast<std::size_t>(best)] = true;
            EXPECT_EQ(sel.col(col++), syn.data.modality(v).row(best).transpose());
        }
    }
    EXPECT_EQ(col, sel.cols());
    EXPECT_THROW(select_features(syn.data, rank_features(model), {0.5, 0.5}), ValueError);
}

TEST(TransformFeatures, MatchesLatentAndEdgeCases)
{
    std::mt19937_64 rng(84);
    const auto data = oracle::random_dataset(rng, 11, 3, {4, 5});
    Model model = oracle::random_model(rng, data, 3);
    const Matrix t = transform_features(data, model);
    const Matrix z = build_latent(data, model);
    EXPECT_LE((t.transpose() - z.topRows(3)).cwiseAbs().maxCoeff(), 1e-12);
    Model ident = model;
    ident.prediction = Matrix::Identity(3, 3);
    ident.bias.setZero();
    EXPECT_LE((oracle::naive_scores(ident, data) - t).cwiseAbs().maxCoeff(), 1e-12);

    model.weights.setZero();
    EXPECT_TRUE(transform_features(data, model).isZero(0.0));

    const MultiModalDataset one({data.modality(0)}, data.labels());
    Model id;
    id.extraction = {Matrix::Identity(4, 4)};
    id.prediction = Matrix::Zero(4, 3);
    id.bias = Vector::Zero(3);
    id.weights = Vector::Ones(1);
    EXPECT_EQ(transform_features(one, id), Matrix(data.modality(0).transpose()));
}

TEST(Knn, ExactAndTieCases)
{
    Matrix train(3, 2);
    train << 0, 0, 2, 0, 5, 5;
    const std::vector<int> labels{0, 1, 2};
    Matrix test(2, 2);
    test << 5, 5, 1, 0; // second point is equidistant from rows 0 and 1
    EXPECT_EQ(knn_classify(train, labels, test), (std::vector<int>{2, 0}));
    EXPECT_THROW(knn_classify(Matrix(0, 2), {}, test), ValueError);
}

TEST(Knn, MatchesBruteForce)
{
    std::mt19937_64 rng(85);
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 10; ++trial) {
        const Index n_train = 20 + trial * 15, n_test = 30;
        Matrix train(n_train, 4), test(n_test, 4);
        std::vector<int> labels;
        for (Index i = 0; i < n_train; ++i) {
            const int c = static_cast<int>(i % 2);
            labels.push_back(c);
            for (Index k = 0; k < 4; ++k) train(i, k) = normal(rng) + 1.5 * c;
        }
        for (Index i = 0; i < n_test; ++i)
            for (Index k = 0; k < 4; ++k) test(i, k) = normal(rng) + 0.75;
        EXPECT_EQ(knn_classify(train, labels, test), oracle::brute_force_1nn(train, labels, test));
    }
}

TEST(Metrics, PerfectAndAbsentClass)
{
    const std::vector<int> truth{0, 1, 1, 0};
    const auto perfect = compute_metrics(truth, truth, 2);
    EXPECT_EQ(perfect.accuracy, 1.0);
    EXPECT_EQ(perfect.macro_f1, 1.0);

    const auto absent = compute_metrics(truth, truth, 3);
    EXPECT_EQ(absent.per_class_f1[2], 0.0);
    EXPECT_DOUBLE_EQ(absent.macro_f1, 2.0 / 3.0);
    EXPECT_THROW(compute_metrics({0, 1}, {0}, 2), ShapeError);
    EXPECT_THROW(compute_metrics({0, 5}, {0, 1}, 2), ValueError);
}

TEST(Metrics, HandComputedFixture)
{
    // truth:  0 0 1 1 2   pred: 0 1 1 1 0
    const auto r = compute_metrics({0, 1, 1, 1, 0}, {0, 0, 1, 1, 2}, 3);
    EXPECT_DOUBLE_EQ(r.accuracy, 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(r.per_class_f1[0], 0.5);       // P = 1/2, R = 1/2
    EXPECT_DOUBLE_EQ(r.per_class_f1[1], 0.8);       // P = 2/3, R = 1
    EXPECT_DOUBLE_EQ(r.per_class_f1[2], 0.0);
    EXPECT_DOUBLE_EQ(r.macro_f1, 1.3 / 3.0);
}

TEST(Metrics, AveragePrecision)
{
    Vector s(3);
    s << 0.9, 0.8, 0.1;
    EXPECT_DOUBLE_EQ(average_precision(s, {true, false, true}), 5.0 / 6.0);
    EXPECT_DOUBLE_EQ(average_precision(s, {true, true, false}), 1.0);
    EXPECT_DOUBLE_EQ(average_precision(s, {false, false, false}), 0.0);

    Matrix scores(3, 2), labels(3, 2);
    scores << 0.9, 0.1, 0.8, 0.2, 0.1, 0.3;
    labels << 1, -1, -1, -1, 1, 1;
    EXPECT_DOUBLE_EQ(mean_average_precision(scores, labels), (5.0 / 6.0 + 1.0) / 2.0);
}

TEST(Metrics, BoundsOnRandomPredictions)
{
    std::mt19937_64 rng(86);
    std::uniform_int_distribution<int> cls(0, 3);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> p, t;
        for (int i = 0; i < 25; ++i) {
            p.push_back(cls(rng));
            t.push_back(cls(rng));
        }
        const auto r = compute_metrics(p, t, 4);
        EXPECT_GE(r.accuracy, 0.0);
        EXPECT_LE(r.accuracy, 1.0);
        EXPECT_GE(r.macro_f1, 0.0);
        EXPECT_LE(r.macro_f1, 1.0);
        const bool all_one = std::all_of(r.per_class_f1.begin(), r.per_class_f1.end(), [](double f) { return f == 1.0; });
        EXPECT_EQ(r.macro_f1 == 1.0, all_one);
    }
}

TEST(Split, DeterministicPartition)
{
    const auto a = train_test_split(20, 0.5, 4), b = train_test_split(20, 0.5, 4), c = train_test_split(20, 0.5, 5);
    EXPECT_EQ(a.train, b.train);
    EXPECT_NE(a.train, c.train);
    EXPECT_EQ(a.train.size(), 10u);
    std::set<Index> all(a.train.begin(), a.train.end());
    all.insert(a.test.begin(), a.test.end());
    EXPECT_EQ(all.size(), 20u);
}

TEST(Synthetic, DeterministicAndShaped)
{
    SyntheticSpec spec;
    spec.seed = 12;
    spec.samples = 40;
    const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
    for (std::size_t v = 0; v < 3; ++v) EXPECT_EQ(a.data.modality(v), b.data.modality(v));
    EXPECT_EQ(a.planted, b.planted);
    EXPECT_EQ(a.data.labels().rows(), 40);
    for (const auto& p : a.planted) EXPECT_EQ(p.size(), 5u);
    EXPECT_EQ(class_labels(a.labels), a.classes);
    spec.informative = {51, 5, 5};
    EXPECT_THROW(generate_synthetic(spec), ValueError);
}

TEST(Synthetic, NoiselessInformativeRowsAreSeparable)
{
    SyntheticSpec spec;
    spec.noise_level = 0.0;
    spec.separation = 5.0;
    spec.samples = 60;
    spec.seed = 2;
    const auto syn = generate_synthetic(spec);
    Matrix informative(spec.samples, 15);
    Index col = 0;
    for (std::size_t v = 0; v < 3; ++v)
        for (const Index i : syn.planted[v]) informative.col(col++) = syn.data.modality(v).row(i).transpose();
    const auto pred = knn_classify(informative, syn.classes, informative);
    EXPECT_EQ(compute_metrics(pred, syn.classes, 5).accuracy, 1.0);
}

TEST(Synthetic, PrecisionAtPlanted)
{
    EXPECT_DOUBLE_EQ(precision_at_planted({3, 1, 0, 2}, {1, 3}), 1.0);
    EXPECT_DOUBLE_EQ(precision_at_planted({3, 0, 1, 2}, {1, 3}), 0.5);
}
