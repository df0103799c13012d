#include <gtest/gtest.h>

#include <random>

#include <lm3fe/solver_w.hpp>

#include "oracles.hpp"

using namespace lm3fe;

namespace {

WSubproblem random_w_sub(std::mt19937_64& rng, Index m, Index n, double gamma_a = 0.3, double sigma = 5.0)
{
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.3, 1.5);
    WSubproblem sub;
    sub.latent.resize(m + 1, n);
    for (Index j = 0; j < n; ++j) {
        for (Index i = 0; i < m; ++i) sub.latent(i, j) = normal(rng);
        sub.latent(m, j) = 1.0;
    }
    sub.labels.resize(n);
    sub.x_inf.resize(n);
    for (Index j = 0; j < n; ++j) {
        sub.labels(j) = normal(rng) < 0 ? -1.0 : 1.0;
        sub.x_inf(j) = unif(rng);
    }
    sub.gamma_a = gamma_a;
    sub.sigma = sigma;
    return sub;
}

Vector random_vector(std::mt19937_64& rng, Index n, double scale = 1.0)
{
    std::normal_distribution<double> normal(0.0, scale);
    Vector v(n);
    for (Index i = 0; i < n; ++i) v(i) = normal(rng);
    return v;
}

double w_objective_oracle(const WSubproblem& sub, const Vector& w)
{
    double f = 0.0;
    for (Index n = 0; n < sub.latent.cols(); ++n)
        f += oracle::hinge_by_max(sub.labels(n) * sub.latent.col(n).dot(w), sub.x_inf(n), sub.sigma);
    return f + sub.gamma_a * w.head(w.size() - 1).squaredNorm();
}

double min_margin_distance(const WSubproblem& sub, const Vector& w)
{
    double best = 1e300;
    for (Index n = 0; n < sub.latent.cols(); ++n)
        best = std::min(best, oracle::branch_distance(sub.labels(n) * sub.latent.col(n).dot(w), sub.x_inf(n), sub.sigma));
    return best;
}

} // namespace

TEST(BuildLatent, SelectorWeightsAndAverage)
{
    Matrix a(2, 3), b(2, 3);
    a << 1, 2, 3, 4, 5, 6;
    b << 0.5, 0.5, 1, 0, 2, 1;
    const MultiModalDataset data({a, b}, Matrix::Ones(3, 1));
    Model model;
    model.extraction = {Matrix::Identity(2, 2), Matrix::Identity(2, 2)};
    model.prediction = Matrix::Zero(2, 1);
    model.bias = Vector::Zero(1);
    model.weights = Vector(2);
    model.weights << 1, 0;
    Matrix z = build_latent(data, model);
    ASSERT_EQ(z.rows(), 3);
    EXPECT_TRUE(z.topRows(2).isApprox(a));
    EXPECT_TRUE(z.row(2).isOnes(0.0));

    model.weights << 0.5, 0.5;
    z = build_latent(data, model);
    EXPECT_TRUE(z.topRows(2).isApprox(0.5 * (a + b)));
}

TEST(BuildLatent, MatchesPerSampleLoop)
{
    std::mt19937_64 rng(21);
    const auto data = oracle::random_dataset(rng, 9, 2, {3, 5, 2});
    const Model model = oracle::random_model(rng, data, 4);
    const Matrix z = build_latent(data, model);
    for (Index n = 0; n < 9; ++n) {
        Vector expect = Vector::Zero(4);
        for (std::size_t v = 0; v < 3; ++v)
            for (Index i = 0; i < data.dim(v); ++i)
                for (Index k = 0; k < 4; ++k)
                    expect(k) += model.weights(static_cast<Index>(v)) * model.extraction[v](i, k) * data.modality(v)(i, n);
        EXPECT_TRUE(z.col(n).head(4).isApprox(expect, 1e-12));
        EXPECT_EQ(z(4, n), 1.0);
    }
}

TEST(BuildLatent, ShapeMismatchThrows)
{
    std::mt19937_64 rng(22);
    const auto data = oracle::random_dataset(rng, 4, 1, {3, 2});
    Model model = oracle::random_model(rng, data, 2);
    model.extraction[0] = Matrix::Zero(5, 2);
    EXPECT_THROW(build_latent(data, model), ShapeError);
}

TEST(GradFwp, HandExample)
{
    WSubproblem sub;
    sub.latent = Matrix::Ones(2, 1);
    sub.labels = Vector::Ones(1);
    sub.x_inf = Vector::Ones(1);
    sub.gamma_a = 7.0;
    sub.sigma = 1.0;
    const Vector g = grad_F_wp(sub, Vector::Zero(2));
    EXPECT_DOUBLE_EQ(g(0), -1.0);
    EXPECT_DOUBLE_EQ(g(1), -1.0);
}

TEST(GradFwp, SatisfiedMarginsLeaveOnlyRidgeTerm)
{
    std::mt19937_64 rng(23);
    WSubproblem sub = random_w_sub(rng, 3, 6);
    // All margins above 1: labels follow the sign of a large score.
    Vector w(4);
    w << 0, 0, 0, 10;
    sub.labels.setOnes();
    const Vector g = grad_F_wp(sub, w);
    Vector expect = 2.0 * sub.gamma_a * w;
    expect(3) = 0.0;
    EXPECT_LT((g - expect).norm(), 1e-14);
}

TEST(GradFwp, MatchesFiniteDifferences)
{
    std::mt19937_64 rng(24);
    int checked = 0;
    while (checked < 20) {
        const WSubproblem sub = random_w_sub(rng, 3, 12);
        const Vector w = random_vector(rng, 4, 0.4);
        if (min_margin_distance(sub, w) < 1e-3) continue;
        const Vector analytic = grad_F_wp(sub, w);
        const Vector numeric = oracle::fd_gradient([&](const Vector& x) { return objective_wp(sub, x); }, w);
        EXPECT_LE((analytic - numeric).norm() / std::max(1.0, analytic.norm()), 1e-5);
        ++checked;
    }
}

TEST(ObjectiveWp, MatchesOracle)
{
    std::mt19937_64 rng(25);
    for (int i = 0; i < 20; ++i) {
        const WSubproblem sub = random_w_sub(rng, 2, 7);
        const Vector w = random_vector(rng, 3);
        EXPECT_NEAR(objective_wp(sub, w), w_objective_oracle(sub, w), 1e-12);
    }
}

TEST(LipschitzFwp, HandExamples)
{
    WSubproblem sub;
    sub.latent = Matrix(2, 1);
    sub.latent << 1, 0;
    sub.labels = Vector::Ones(1);
    sub.x_inf = Vector::Ones(1);
    sub.gamma_a = 0.1;
    sub.sigma = 5.0;
    EXPECT_NEAR(lipschitz_F_wp(sub), 0.4, 1e-15);

    sub.latent *= 2.0;
    EXPECT_NEAR(lipschitz_F_wp(sub) - 0.2, 4.0 * 0.2, 1e-15);

    sub.latent.setZero();
    EXPECT_DOUBLE_EQ(lipschitz_F_wp(sub), 0.2);
}

TEST(LipschitzFwp, BoundsGradientDifferences)
{
    std::mt19937_64 rng(26);
    int violations = 0;
    for (int i = 0; i < 100; ++i) {
        const WSubproblem sub = random_w_sub(rng, 3, 10, 0.2, 2.0);
        const Vector a = random_vector(rng, 4, 2.0), b = random_vector(rng, 4, 2.0);
        const double lhs = (grad_F_wp(sub, a) - grad_F_wp(sub, b)).norm();
        if (lhs > lipschitz_F_wp(sub) * (a - b).norm() * (1 + 1e-12)) ++violations;
    }
    EXPECT_EQ(violations, 0);
}

TEST(SolveWp, SeparableToyMatchesGridSearch)
{
    WSubproblem sub;
    sub.latent = Matrix(2, 2);
    sub.latent << 1, -1, 1, 1;
    sub.labels = Vector(2);
    sub.labels << 1, -1;
    sub.x_inf = Vector::Ones(2);
    sub.gamma_a = 0.1;
    sub.sigma = 5.0;
    const auto res = solve_wp(sub, Vector::Zero(2), 1e-10, 20000);
    const auto grid = oracle::grid_min_2d(
        [&](double w, double b) {
            Vector v(2);
            v << w, b;
            return w_objective_oracle(sub, v);
        },
        -5, 5, -5, 5);
    EXPECT_NEAR(res.objective, grid.value, 1e-4);
    EXPECT_LE(res.objective, grid.value + 1e-4);
}

TEST(SolveWp, ZeroDataGivesZeroWeights)
{
    std::mt19937_64 rng(27);
    WSubproblem sub = random_w_sub(rng, 3, 8);
    sub.latent.topRows(3).setZero();
    const auto res = solve_wp(sub, Vector::Zero(4), 1e-8, 2000);
    EXPECT_LT(res.solution.head(3).norm(), 1e-12);
}

TEST(SolveWp, NeverWorseThanStart)
{
    std::mt19937_64 rng(28);
    for (int i = 0; i < 30; ++i) {
        const WSubproblem sub = random_w_sub(rng, 4, 15);
        const auto res = solve_wp(sub, Vector::Zero(5), 1e-3, 500);
        EXPECT_LE(res.objective, objective_wp(sub, Vector::Zero(5)));
        EXPECT_DOUBLE_EQ(res.objective, objective_wp(sub, res.solution));
        EXPECT_EQ(res.trace.front(), objective_wp(sub, Vector::Zero(5)));
    }
}

TEST(SolveWp, NonFiniteDataThrowsDivergence)
{
    std::mt19937_64 rng(29);
    WSubproblem sub = random_w_sub(rng, 2, 4);
    sub.latent(0, 0) = std::numeric_limits<double>::infinity();
    EXPECT_THROW(solve_wp(sub, Vector::Zero(3), 1e-3, 10), DivergenceError);
}

TEST(SolveW, SingleTaskMatchesSolveWp)
{
    std::mt19937_64 rng(30);
    const auto data = oracle::random_dataset(rng, 12, 1, {4, 3});
    Model model = oracle::random_model(rng, data, 3);
    model.prediction.setZero();
    model.bias.setZero();
    SolverConfig cfg;
    const auto upd = solve_W(data, model, cfg);
    const auto ref = solve_wp(make_w_subproblem(data, model, 0, cfg), Vector::Zero(4), cfg.epsilon, cfg.max_inner_iters);
    Vector got(4);
    got << upd.prediction.col(0), upd.bias(0);
    EXPECT_TRUE(got == ref.solution || upd.kept_previous[0]);
}

TEST(SolveW, DuplicatedTasksAndPermutation)
{
    std::mt19937_64 rng(31);
    const auto base = oracle::random_dataset(rng, 15, 3, {4, 3});
    Matrix y(15, 4);
    y << base.labels(), base.labels().col(1);
    const MultiModalDataset data(base.modalities(), y);
    Model model = oracle::random_model(rng, data, 3);
    model.prediction.setZero();
    model.bias.setZero();
    SolverConfig cfg;
    const auto upd = solve_W(data, model, cfg);
    EXPECT_EQ(upd.prediction.col(1), upd.prediction.col(3));
    EXPECT_EQ(upd.bias(1), upd.bias(3));

    Matrix y_perm(15, 4);
    y_perm << y.col(2), y.col(0), y.col(3), y.col(1);
    const MultiModalDataset permuted(base.modalities(), y_perm);
    const auto upd_perm = solve_W(permuted, model, cfg);
    EXPECT_EQ(upd_perm.prediction.col(0), upd.prediction.col(2));
    EXPECT_EQ(upd_perm.prediction.col(1), upd.prediction.col(0));
    EXPECT_EQ(upd_perm.bias(2), upd.bias(3));
}

TEST(SolveW, PerTaskObjectiveDoesNotIncrease)
{
    std::mt19937_64 rng(32);
    SolverConfig cfg;
    for (int trial = 0; trial < 10; ++trial) {
        const auto data = oracle::random_dataset(rng, 20, 3, {5, 4});
        const Model model = oracle::random_model(rng, data, 3);
        const auto upd = solve_W(data, model, cfg);
        for (Index p = 0; p < 3; ++p) {
            const auto sub = make_w_subproblem(data, model, p, cfg);
            Vector before(4), after(4);
            before << model.prediction.col(p), model.bias(p);
            after << upd.prediction.col(p), upd.bias(p);
            EXPECT_LE(objective_wp(sub, after), objective_wp(sub, before));
        }
    }
}
