#pragma once

#include <cassert>
#include <cmath>
#include <vector>

#include "config.hpp"
#include "smoothed_hinge.hpp"
#include "stopping.hpp"

namespace lm3fe {

/**
 * Modality-weight sub-problem with W and the U's frozen:
 *
 *   min_{theta >= 0}  sum_{p,n} g(y_pn (theta^T z_pn + b_p)) + gamma_c ||theta||^2
 *
 * where z_pn^(v) = w_p^T U_v^T x_n^(v).
 */
struct ThetaSubproblem
{
    std::vector<Matrix> components; ///< Z_p, one V x N matrix per task
    Vector bias;                    ///< b, length P
    Matrix labels;                  ///< N x P
    Vector x_inf;                   ///< N
    double gamma_c = 1.0;
    double sigma = 5.0;

    [[nodiscard]] Index dim() const { return components.empty() ? 0 : components.front().rows(); }
    [[nodiscard]] Index tasks() const { return static_cast<Index>(components.size()); }

    void validate() const
    {
        if (components.empty()) throw ShapeError("theta sub-problem: no tasks");
        const Index n = labels.rows();
        for (const auto& z : components) detail::require_shape(z, dim(), n, "theta sub-problem Z_p");
        detail::require_shape(labels, n, tasks(), "theta sub-problem labels");
        detail::require_size(bias, tasks(), "theta sub-problem bias");
        detail::require_size(x_inf, n, "theta sub-problem x_inf");
    }
};

inline ThetaSubproblem make_theta_subproblem(const MultiModalDataset& data, const Model& model,
                                             const SolverConfig& config)
{
    model.check_compatible(data);
    const auto v_count = static_cast<Index>(data.num_modalities());
    std::vector<Matrix> per_modality; // P x N each: row p holds w_p^T U_v^T x_n
    per_modality.reserve(data.num_modalities());
    for (std::size_t v = 0; v < data.num_modalities(); ++v) {
        per_modality.emplace_back(model.prediction.transpose() *
                                  (model.extraction[v].transpose() * data.modality(v)));
    }
    std::vector<Matrix> comps(static_cast<std::size_t>(data.num_tasks()),
                              Matrix(v_count, data.num_samples()));
    for (Index p = 0; p < data.num_tasks(); ++p)
        for (Index v = 0; v < v_count; ++v)
            comps[static_cast<std::size_t>(p)].row(v) = per_modality[static_cast<std::size_t>(v)].row(p);
    return ThetaSubproblem{std::move(comps), model.bias, data.labels(), data.sample_inf_norms(),
                           config.gamma_c, config.sigma};
}

/// Elementwise max(x, 0).
inline Vector project_nonneg(const Vector& x)
{
    return x.cwiseMax(0.0);
}

namespace detail {

inline Matrix theta_scores(const ThetaSubproblem& sub, const Vector& theta)
{
    Matrix s(sub.labels.rows(), sub.tasks());
    for (Index p = 0; p < sub.tasks(); ++p)
        s.col(p) = sub.components[static_cast<std::size_t>(p)].transpose() * theta +
                   Vector::Constant(sub.labels.rows(), sub.bias(p));
    return s;
}

} // namespace detail

inline double objective_theta(const ThetaSubproblem& sub, const Vector& theta)
{
    detail::require_size(theta, sub.dim(), "theta");
    return detail::hinge_and_nu(detail::theta_scores(sub, theta), sub.labels, sub.x_inf, sub.sigma, nullptr) +
           sub.gamma_c * theta.squaredNorm();
}

/// sum_p -Z_p Y_p nu_p + 2 gamma_c theta.
inline Vector grad_F_theta(const ThetaSubproblem& sub, const Vector& theta)
{
    detail::require_size(theta, sub.dim(), "theta");
    Matrix nu;
    detail::hinge_and_nu(detail::theta_scores(sub, theta), sub.labels, sub.x_inf, sub.sigma, &nu);
    Vector g = 2.0 * sub.gamma_c * theta;
    for (Index p = 0; p < sub.tasks(); ++p)
        g.noalias() -= sub.components[static_cast<std::size_t>(p)] * sub.labels.col(p).cwiseProduct(nu.col(p));
    return g;
}

/// (P N / sigma) max_{p,n} ||z_pn||^2 / ||x_n||_inf + 2 gamma_c.
inline double lipschitz_F_theta(const ThetaSubproblem& sub)
{
    double worst = 0.0;
    for (const auto& z : sub.components) {
        if (z.cols() == 0) continue;
        worst = std::max(worst, z.colwise().squaredNorm().transpose().cwiseQuotient(sub.x_inf).maxCoeff());
    }
    const double pn = static_cast<double>(sub.tasks()) * static_cast<double>(sub.labels.rows());
    return pn / sub.sigma * worst + 2.0 * sub.gamma_c;
}

/// Momentum sequence rho_{t+1} = (1 + sqrt(4 rho_t^2 + 1)) / 2.
inline double next_rho(double rho)
{
    return 0.5 * (1.0 + std::sqrt(4.0 * rho * rho + 1.0));
}

/**
 * Projected optimal gradient method:
 *
 *   theta^{t+1} = P[y^t - grad F(y^t) / L]
 *   y^{t+1}     = theta^{t+1} + (rho_t - 1) / rho_{t+1} (theta^{t+1} - theta^t)
 *
 * with rho_0 = 1 and y^0 = theta^0. Only theta iterates are projected; the
 * extrapolated point may leave the orthant. Returns the best feasible iterate.
 */
inline SolveResult<Vector> solve_theta(const ThetaSubproblem& sub, const Vector& theta_init, double epsilon,
                                       int max_iters)
{
    sub.validate();
    detail::require_size(theta_init, sub.dim(), "theta_init");
    if ((theta_init.array() < 0.0).any()) throw ValueError("solve_theta: initial theta must be non-negative");
    const double lipschitz = lipschitz_F_theta(sub);

    SolveResult<Vector> result;
    Vector theta = theta_init;
    Vector y = theta_init;
    double rho = 1.0;

    const double f0 = objective_theta(sub, theta);
    if (!std::isfinite(f0)) throw DivergenceError("solve_theta: non-finite initial objective");
    result.trace.push_back(f0);
    result.solution = theta;
    result.objective = f0;
    double f_curr = f0;

    for (int t = 0; t < max_iters; ++t) {
        const Vector next = project_nonneg(y - grad_F_theta(sub, y) / lipschitz);
        assert((next.array() >= 0.0).all());
        const double rho_next = next_rho(rho);
        y = next + ((rho - 1.0) / rho_next) * (next - theta);
        theta = next;
        rho = rho_next;

        const double f_next = objective_theta(sub, theta);
        if (!std::isfinite(f_next)) throw DivergenceError("solve_theta: non-finite objective");
        result.trace.push_back(f_next);
        if (f_next < result.objective) {
            result.objective = f_next;
            result.solution = theta;
        }
        if (detail::relative_change_converged(f0, f_curr, f_next, epsilon)) {
            result.converged = true;
            break;
        }
        f_curr = f_next;
    }
    return result;
}

} // namespace lm3fe
