#pragma once

#include <cmath>
#include <vector>

#include "config.hpp"
#include "smoothed_hinge.hpp"
#include "stopping.hpp"

namespace lm3fe {

/**
 * Extraction sub-problem for modality v with W, theta and the other U's frozen:
 *
 *   min_U  sum_{p,n} g(y_pn (theta_v w_p^T U^T x_n + c_pn)) + gamma_b ||U||_{2,1}
 *
 * The l2,1 term is handled through the reweighted quadratic gamma_b tr(U^T D U)
 * with D_ii = 1 / (2 ||u^i||), refreshed after every step.
 */
struct USubproblem
{
    Matrix features;    ///< X_v, d_v x N
    Matrix prediction;  ///< W without the bias, m x P
    Matrix labels;      ///< N x P, +-1
    Matrix offsets;     ///< c_pn as an N x P matrix (other modalities plus bias)
    Vector x_inf;       ///< N
    double theta = 1.0; ///< theta_v
    double gamma_b = 1.0;
    double sigma = 5.0;
    double d_floor = 1e-12;

    [[nodiscard]] Index rows() const { return features.rows(); }
    [[nodiscard]] Index cols() const { return prediction.rows(); }

    void validate() const
    {
        const Index n = features.cols();
        const Index p = prediction.cols();
        detail::require_shape(labels, n, p, "U sub-problem labels");
        detail::require_shape(offsets, n, p, "U sub-problem offsets");
        detail::require_size(x_inf, n, "U sub-problem x_inf");
    }
};

/// D_ii = 1 / (2 max(||u^i||, floor)).
inline Vector update_D(const Matrix& u, double d_floor)
{
    return (2.0 * u.rowwise().norm().cwiseMax(d_floor)).cwiseInverse();
}

namespace detail {

inline Matrix u_scores(const USubproblem& sub, const Matrix& u)
{
    Matrix s = sub.offsets;
    if (sub.theta != 0.0) s.noalias() += sub.theta * (sub.features.transpose() * (u * sub.prediction));
    return s;
}

} // namespace detail

/// Smoothed loss of the sub-problem (without any regularizer).
inline double loss_Uv(const USubproblem& sub, const Matrix& u)
{
    detail::require_shape(u, sub.rows(), sub.cols(), "U_v");
    return detail::hinge_and_nu(detail::u_scores(sub, u), sub.labels, sub.x_inf, sub.sigma, nullptr);
}

/// Loss plus gamma_b ||U||_{2,1}: the quantity the reweighting scheme decreases.
inline double objective_Uv(const USubproblem& sub, const Matrix& u)
{
    return loss_Uv(sub, u) + sub.gamma_b * l21_norm(u);
}

/// Loss plus gamma_b tr(U^T D U) for a frozen diagonal D.
inline double surrogate_Uv(const USubproblem& sub, const Matrix& u, const Vector& d)
{
    detail::require_size(d, sub.rows(), "D");
    return loss_Uv(sub, u) + sub.gamma_b * (d.array() * u.rowwise().squaredNorm().array()).sum();
}

/// -theta_v X_v (Y o nu) W^T + 2 gamma_b D U.
inline Matrix grad_F_Uv(const USubproblem& sub, const Matrix& u, const Vector& d)
{
    detail::require_shape(u, sub.rows(), sub.cols(), "U_v");
    detail::require_size(d, sub.rows(), "D");
    Matrix grad = 2.0 * sub.gamma_b * (d.asDiagonal() * u);
    if (sub.theta == 0.0) return grad;
    Matrix nu;
    detail::hinge_and_nu(detail::u_scores(sub, u), sub.labels, sub.x_inf, sub.sigma, &nu);
    const Matrix weighted = sub.labels.cwiseProduct(nu); // N x P
    grad.noalias() -= sub.theta * (sub.features * (weighted * sub.prediction.transpose()));
    return grad;
}

/// (P N theta_v^2 / sigma) max_p ||w_p||^2 max_n ||x_n||^2 / ||x_n||_inf + 2 gamma_b max_i D_ii.
/// The rank-one norm ||x w^T|| ||x|| ||w|| equals ||x||^2 ||w||^2 and the double max separates.
inline double lipschitz_F_Uv(const USubproblem& sub, const Vector& d)
{
    const auto n = static_cast<double>(sub.features.cols());
    const auto p = static_cast<double>(sub.prediction.cols());
    double data_term = 0.0;
    if (sub.theta != 0.0 && sub.features.cols() > 0 && sub.prediction.cols() > 0) {
        const double w_max = sub.prediction.colwise().squaredNorm().maxCoeff();
        const double x_max =
            sub.features.colwise().squaredNorm().transpose().cwiseQuotient(sub.x_inf).maxCoeff();
        data_term = p * n * sub.theta * sub.theta / sub.sigma * w_max * x_max;
    }
    return data_term + 2.0 * sub.gamma_b * d.maxCoeff();
}

/**
 * Accelerated reweighted scheme for one modality. Each iteration
 *
 *   1. forms the gradient and Lipschitz constant L_t with the current D_t;
 *   2. Y^t = U_t - grad / L_t,  Z^t = U_hat - (1/L_t) sum_{i<=t} (i+1)/2 grad_i;
 *   3. U_{t+1} = 2/(t+3) Z^t + (t+1)/(t+3) Y^t;
 *   4. refreshes D from U_{t+1}.
 *
 * If the combined point raises Phi(U) + gamma_b ||U||_{2,1}, the plain
 * gradient point Y^t is taken instead. Y^t decreases the D_t-surrogate by the
 * descent lemma, hence the true objective by the reweighting inequality, so
 * the objective sequence is non-increasing up to the d_floor perturbation.
 * Rises beyond a 1e-10 relative slack are counted in monotonicity_violations.
 * Rows with norm at or below d_floor are held at zero and left out of L_t.
 */
inline SolveResult<Matrix> solve_Uv(const USubproblem& sub, const Matrix& u_init, double epsilon,
                                    int max_iters)
{
    sub.validate();
    detail::require_shape(u_init, sub.rows(), sub.cols(), "U_init");
    constexpr double slack = 1e-10;

    SolveResult<Matrix> result;
    Matrix u = u_init;
    const Matrix& anchor = u_init;
    Vector d = update_D(u, sub.d_floor);
    Matrix weighted_grad_sum = Matrix::Zero(u.rows(), u.cols());

    const double f0 = objective_Uv(sub, u);
    if (!std::isfinite(f0)) throw DivergenceError("solve_Uv: non-finite initial objective");
    result.trace.push_back(f0);
    result.solution = u;
    result.objective = f0;
    double f_curr = f0;

    for (int t = 0; t < max_iters; ++t) {
        // Rows at the floor stay pinned at zero; their reweight would otherwise dictate the step size.
        const Vector norms = u.rowwise().norm();
        Vector d_active = d;
        for (Index i = 0; i < u.rows(); ++i)
            if (norms(i) <= sub.d_floor) d_active(i) = 0.0;
        Matrix g = grad_F_Uv(sub, u, d);
        const double lipschitz = lipschitz_F_Uv(sub, d_active);
        if (!(lipschitz > 0.0)) {
            result.converged = true;
            break;
        }
        auto pin = [&](Matrix& m) {
            for (Index i = 0; i < m.rows(); ++i)
                if (norms(i) <= sub.d_floor) m.row(i).setZero();
        };
        pin(g);
        Matrix y = u - g / lipschitz;
        pin(y);
        weighted_grad_sum += 0.5 * (t + 1) * g;
        const Matrix z = anchor - weighted_grad_sum / lipschitz;
        Matrix next = (2.0 / (t + 3)) * z + (static_cast<double>(t + 1) / (t + 3)) * y;
        pin(next);

        double f_next = objective_Uv(sub, next);
        if (!(f_next <= f_curr)) {
            next = std::move(y);
            f_next = objective_Uv(sub, next);
            ++result.fallback_steps;
        }
        if (!std::isfinite(f_next)) throw DivergenceError("solve_Uv: non-finite objective");
        if (f_next > f_curr + slack * std::abs(f_curr)) ++result.monotonicity_violations;

        u = std::move(next);
        d = update_D(u, sub.d_floor);
        result.trace.push_back(f_next);
        if (f_next < result.objective) {
            result.objective = f_next;
            result.solution = u;
        }
        if (detail::relative_change_converged(f0, f_curr, f_next, epsilon)) {
            result.converged = true;
            break;
        }
        f_curr = f_next;
    }
    return result;
}

/// Offsets c_pn for modality v: contributions of the other modalities plus the bias.
inline Matrix u_offsets(const MultiModalDataset& data, const Model& model, std::size_t v)
{
    Matrix latent = Matrix::Zero(model.latent_dim(), data.num_samples());
    for (std::size_t k = 0; k < data.num_modalities(); ++k) {
        const double t = model.weights(static_cast<Index>(k));
        if (k == v || t == 0.0) continue;
        latent.noalias() += t * (model.extraction[k].transpose() * data.modality(k));
    }
    Matrix c = latent.transpose() * model.prediction;
    c.rowwise() += model.bias.transpose();
    return c;
}

inline USubproblem make_u_subproblem(const MultiModalDataset& data, const Model& model, std::size_t v,
                                     const SolverConfig& config)
{
    return USubproblem{data.modality(v),
                       model.prediction,
                       data.labels(),
                       u_offsets(data, model, v),
                       data.sample_inf_norms(),
                       model.weights(static_cast<Index>(v)),
                       config.gamma_b,
                       config.sigma,
                       config.d_floor};
}

struct UUpdate
{
    std::vector<Matrix> extraction;
    std::vector<SolveResult<Matrix>> modalities; ///< one per (sweep, modality), in solve order
};

/// Alternates over modalities (config.u_sweeps passes), rebuilding each
/// modality's offsets from the freshest extraction matrices.
inline UUpdate solve_all_U(const MultiModalDataset& data, const Model& model, const SolverConfig& config)
{
    model.check_compatible(data);
    Model work = model;
    UUpdate out;
    for (int sweep = 0; sweep < config.u_sweeps; ++sweep) {
        for (std::size_t v = 0; v < data.num_modalities(); ++v) {
            const USubproblem sub = make_u_subproblem(data, work, v, config);
            auto res = solve_Uv(sub, work.extraction[v], config.epsilon, config.max_inner_iters);
            work.extraction[v] = res.solution;
            out.modalities.push_back(std::move(res));
        }
    }
    out.extraction = std::move(work.extraction);
    return out;
}

} // namespace lm3fe
