#pragma once

#include <cmath>
#include <vector>

#include "config.hpp"
#include "parallel.hpp"
#include "smoothed_hinge.hpp"
#include "stopping.hpp"

namespace lm3fe {

/**
 * Per-task prediction sub-problem with U and theta frozen:
 *
 *   min_w  sum_n g(y_n w^T z_n) + gamma_a ||w[0:m)||^2
 *
 * where z_n is the latent feature of sample n augmented with a trailing 1, so
 * the last coordinate of w is the (unregularized) bias.
 */
struct WSubproblem
{
    Matrix latent;      ///< (m+1) x N, last row all ones
    Vector labels;      ///< y_p, length N, entries +-1
    Vector x_inf;       ///< ||x_n||_inf of the concatenated sample
    double gamma_a = 1.0;
    double sigma = 5.0;

    [[nodiscard]] Index dim() const { return latent.rows(); }

    void validate() const
    {
        detail::require_size(labels, latent.cols(), "W sub-problem labels");
        detail::require_size(x_inf, latent.cols(), "W sub-problem x_inf");
    }
};

/// Latent matrix with the bias row appended: [sum_v theta_v U_v^T X_v ; 1^T].
inline Matrix build_latent(const MultiModalDataset& data, const Model& model)
{
    const Matrix z = latent_features(model, data);
    Matrix out(z.rows() + 1, z.cols());
    out.topRows(z.rows()) = z;
    out.row(z.rows()).setOnes();
    return out;
}

inline WSubproblem make_w_subproblem(const MultiModalDataset& data, const Model& model, Index task,
                                     const SolverConfig& config)
{
    return WSubproblem{build_latent(data, model), data.labels().col(task), data.sample_inf_norms(),
                       config.gamma_a, config.sigma};
}

inline double objective_wp(const WSubproblem& sub, const Vector& w)
{
    detail::require_size(w, sub.dim(), "w_p");
    const Vector scores = sub.latent.transpose() * w;
    const double loss = detail::hinge_and_nu(scores, sub.labels, sub.x_inf, sub.sigma, nullptr);
    return loss + sub.gamma_a * w.head(sub.dim() - 1).squaredNorm();
}

/// -Z Y_p nu_p + 2 gamma_a w, with no regularizer contribution to the bias.
inline Vector grad_F_wp(const WSubproblem& sub, const Vector& w)
{
    detail::require_size(w, sub.dim(), "w_p");
    const Vector scores = sub.latent.transpose() * w;
    Vector nu;
    detail::hinge_and_nu(scores, sub.labels, sub.x_inf, sub.sigma, &nu);
    Vector g = -(sub.latent * sub.labels.cwiseProduct(nu));
    g.head(sub.dim() - 1) += 2.0 * sub.gamma_a * w.head(sub.dim() - 1);
    return g;
}

/// (N / sigma) max_n ||z_n||^2 / ||x_n||_inf + 2 gamma_a.
inline double lipschitz_F_wp(const WSubproblem& sub)
{
    const Index n = sub.latent.cols();
    const Vector ratio = sub.latent.colwise().squaredNorm().transpose().cwiseQuotient(sub.x_inf);
    const double data_term = n > 0 ? static_cast<double>(n) / sub.sigma * ratio.maxCoeff() : 0.0;
    return data_term + 2.0 * sub.gamma_a;
}

/**
 * Nesterov's smooth minimization scheme on one task:
 *
 *   y^t     = w^t - grad F(w^t) / L
 *   z^t     = w_hat - (1/L) sum_{i<=t} (i+1)/2 grad F(w^i)
 *   w^{t+1} = 2/(t+3) z^t + (t+1)/(t+3) y^t
 *
 * with w^0 = w_hat = w_init. Stops when the relative objective change drops
 * below epsilon; returns the lowest-objective iterate seen.
 */
inline SolveResult<Vector> solve_wp(const WSubproblem& sub, const Vector& w_init, double epsilon,
                                    int max_iters)
{
    sub.validate();
    detail::require_size(w_init, sub.dim(), "w_init");
    const double lipschitz = lipschitz_F_wp(sub);

    SolveResult<Vector> result;
    Vector w = w_init;
    const Vector& anchor = w_init;
    Vector weighted_grad_sum = Vector::Zero(sub.dim());

    const double f0 = objective_wp(sub, w);
    if (!std::isfinite(f0)) throw DivergenceError("solve_wp: non-finite initial objective");
    result.trace.push_back(f0);
    result.solution = w;
    result.objective = f0;
    double f_curr = f0;

    for (int t = 0; t < max_iters; ++t) {
        const Vector g = grad_F_wp(sub, w);
        const Vector y = w - g / lipschitz;
        weighted_grad_sum += 0.5 * (t + 1) * g;
        const Vector z = anchor - weighted_grad_sum / lipschitz;
        w = (2.0 / (t + 3)) * z + (static_cast<double>(t + 1) / (t + 3)) * y;

        const double f_next = objective_wp(sub, w);
        if (!std::isfinite(f_next)) throw DivergenceError("solve_wp: non-finite objective");
        result.trace.push_back(f_next);
        if (f_next < result.objective) {
            result.objective = f_next;
            result.solution = w;
        }
        if (detail::relative_change_converged(f0, f_curr, f_next, epsilon)) {
            result.converged = true;
            break;
        }
        f_curr = f_next;
    }
    return result;
}

struct WUpdate
{
    Matrix prediction;  ///< m x P
    Vector bias;        ///< P
    std::vector<SolveResult<Vector>> tasks;
    std::vector<bool> kept_previous; ///< task whose fresh solve did not beat the incoming w_p
};

/**
 * Solves the P independent task problems (in parallel), each started from
 * zero. A task keeps its incoming (w_p, b_p) when the fresh solve does not
 * improve on it, so the W stage never increases the objective.
 */
inline WUpdate solve_W(const MultiModalDataset& data, const Model& model, const SolverConfig& config)
{
    model.check_compatible(data);
    const Index m = model.latent_dim();
    const Index tasks = data.num_tasks();
    const Matrix latent = build_latent(data, model);

    WUpdate out;
    out.prediction.resize(m, tasks);
    out.bias.resize(tasks);
    out.tasks.resize(static_cast<std::size_t>(tasks));
    out.kept_previous.assign(static_cast<std::size_t>(tasks), false);
    std::vector<char> kept(static_cast<std::size_t>(tasks), 0);

    parallel_for(static_cast<std::size_t>(tasks), [&](std::size_t idx) {
        const auto p = static_cast<Index>(idx);
        WSubproblem sub{latent, data.labels().col(p), data.sample_inf_norms(), config.gamma_a, config.sigma};
        auto res = solve_wp(sub, Vector::Zero(m + 1), config.epsilon, config.max_inner_iters);

        Vector previous(m + 1);
        previous << model.prediction.col(p), model.bias(p);
        const double f_prev = objective_wp(sub, previous);
        if (f_prev <= res.objective) {
            res.solution = previous;
            res.objective = f_prev;
            kept[idx] = 1;
        }
        out.prediction.col(p) = res.solution.head(m);
        out.bias(p) = res.solution(m);
        out.tasks[idx] = std::move(res);
    });
    for (std::size_t i = 0; i < kept.size(); ++i) out.kept_previous[i] = kept[i] != 0;
    return out;
}

} // namespace lm3fe
