#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "evaluation.hpp"
#include "extraction.hpp"
#include "stopping.hpp"

namespace lm3fe {

/// Single-matrix multi-task problem over concatenated features.
struct ConcatProblem
{
    Matrix features;  ///< X, d x N
    Matrix targets;   ///< Y, N x P
    double gamma = 1.0;
    bool fit_bias = true; ///< append an unregularized constant-1 feature row

    void validate() const
    {
        if (features.cols() != targets.rows())
            throw ShapeError("concat problem: X has " + std::to_string(features.cols()) + " samples, Y has " +
                             std::to_string(targets.rows()));
        if (!(gamma > 0.0)) throw ValueError("concat problem: gamma must be positive");
    }
};

struct BaselineResult
{
    Matrix weights;             ///< U, d x P (bias row excluded)
    Vector bias;                ///< P; zero when fit_bias is false
    std::vector<double> trace;  ///< objective after each reweighted solve
    int ridge_bumps = 0;        ///< solves that needed the 1e-10 diagonal shift
    bool converged = false;
};

enum class BaselineLoss { l21, squared };

namespace detail {

inline constexpr double kReweightFloor = 1e-12;

inline double baseline_objective(BaselineLoss loss, const Matrix& x, const Matrix& y, const Matrix& u,
                                 Index regularized_rows, double gamma)
{
    const Matrix r = x.transpose() * u - y;
    const double fit = loss == BaselineLoss::l21 ? r.rowwise().norm().sum()
                                                 : r.squaredNorm() / static_cast<double>(x.cols());
    return fit + gamma * l21_norm(u.topRows(regularized_rows));
}

// Iteratively reweighted solve of (X D1 X^T + gamma D2) U = X D1 Y, starting from D1 = D2 = I
// (D1 = I/N throughout for the squared loss). The bias row, if present, gets D2 = 0.
inline BaselineResult reweighted_solve(BaselineLoss loss, const ConcatProblem& problem, int max_iters, double tol)
{
    problem.validate();
    const Index d = problem.features.rows();
    const Index n = problem.features.cols();
    const Index rows = d + (problem.fit_bias ? 1 : 0);
    Matrix x(rows, n);
    x.topRows(d) = problem.features;
    if (problem.fit_bias) x.row(d).setOnes();
    const Matrix& y = problem.targets;

    Vector d1 = loss == BaselineLoss::l21 ? Vector::Ones(n) : Vector::Constant(n, 1.0 / static_cast<double>(n));
    Vector d2 = Vector::Ones(rows);
    if (problem.fit_bias) d2(d) = 0.0;

    BaselineResult out;
    Matrix u;
    for (int it = 0; it < max_iters; ++it) {
        Matrix a = x * d1.asDiagonal() * x.transpose();
        a.diagonal() += problem.gamma * d2;
        const Matrix rhs = x * d1.asDiagonal() * y;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success) {
            a.diagonal().array() += 1e-10;
            llt.compute(a);
            ++out.ridge_bumps;
            if (llt.info() != Eigen::Success) throw DivergenceError("baseline: singular system after ridge bump");
        }
        u = llt.solve(rhs);

        const double f = baseline_objective(loss, x, y, u, d, problem.gamma);
        if (!std::isfinite(f)) throw DivergenceError("baseline: non-finite objective");
        const bool done = !out.trace.empty() &&
                          std::abs(out.trace.back() - f) <= tol * std::max(std::abs(f), 1e-300);
        out.trace.push_back(f);
        if (done) {
            out.converged = true;
            break;
        }

        if (loss == BaselineLoss::l21) {
            const Matrix r = x.transpose() * u - y;
            d1 = (2.0 * r.rowwise().norm().cwiseMax(kReweightFloor)).cwiseInverse();
        }
        d2.head(d) = (2.0 * u.topRows(d).rowwise().norm().cwiseMax(kReweightFloor)).cwiseInverse();
    }
    out.weights = u.topRows(d);
    out.bias = problem.fit_bias ? Vector(u.row(d).transpose()) : Vector::Zero(y.cols());
    return out;
}

} // namespace detail

/// min_U ||X^T U - Y||_{2,1} + gamma ||U||_{2,1} by iterative reweighting.
inline BaselineResult solve_rfs(const ConcatProblem& problem, int max_iters = 200, double tol = 1e-8)
{
    return detail::reweighted_solve(BaselineLoss::l21, problem, max_iters, tol);
}

/// min_U (1/N) ||X^T U - Y||_F^2 + gamma ||U||_{2,1} by iterative reweighting.
inline BaselineResult solve_mtfs(const ConcatProblem& problem, int max_iters = 200, double tol = 1e-8)
{
    return detail::reweighted_solve(BaselineLoss::squared, problem, max_iters, tol);
}

inline double rfs_objective(const ConcatProblem& problem, const BaselineResult& r)
{
    const Matrix resid = problem.features.transpose() * r.weights - problem.targets;
    Matrix fitted = resid;
    fitted.rowwise() += r.bias.transpose();
    return fitted.rowwise().norm().sum() + problem.gamma * l21_norm(r.weights);
}

enum class ReferencePipeline { bsf, cat };

/**
 * 1-NN reference pipelines: BSF reports the best single modality (by
 * accuracy, then macro-F1, then lowest index), CAT the concatenation of all
 * modalities.
 */
inline EvalReport run_reference(const MultiModalDataset& data, ReferencePipeline pipeline, const Split& split)
{
    const auto classes = class_labels(data.labels());
    const auto p = static_cast<int>(data.num_tasks());
    if (pipeline == ReferencePipeline::cat) return evaluate_knn(concatenated_features(data), classes, split, p);
    EvalReport best;
    bool first = true;
    for (std::size_t v = 0; v < data.num_modalities(); ++v) {
        EvalReport r = evaluate_knn(data.modality(v).transpose(), classes, split, p);
        if (first || r.accuracy > best.accuracy || (r.accuracy == best.accuracy && r.macro_f1 > best.macro_f1)) {
            best = std::move(r);
            first = false;
        }
    }
    return best;
}

} // namespace lm3fe
