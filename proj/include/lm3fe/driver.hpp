#pragma once

#include <cmath>
#include <random>
#include <string>
#include <utility>

#include "config.hpp"
#include "solver_theta.hpp"
#include "solver_u.hpp"
#include "solver_w.hpp"

namespace lm3fe {

inline Index resolved_latent_dim(const MultiModalDataset& data, const SolverConfig& config)
{
    return config.latent_dim > 0 ? config.latent_dim : data.num_tasks();
}

/// Random U_v ~ Uniform[-s, s] with s = 1/sqrt(d_v m), theta_v = 1/V, W = 0, b = 0.
inline Model initialize(const MultiModalDataset& data, const SolverConfig& config)
{
    const Index m = resolved_latent_dim(data, config);
    std::mt19937_64 rng(config.rng_seed);
    Model model;
    for (std::size_t v = 0; v < data.num_modalities(); ++v) {
        const Index d = data.dim(v);
        const double s = 1.0 / std::sqrt(static_cast<double>(d * m));
        std::uniform_real_distribution<double> dist(-s, s);
        Matrix u(d, m);
        for (Index j = 0; j < m; ++j)
            for (Index i = 0; i < d; ++i) u(i, j) = dist(rng);
        model.extraction.push_back(std::move(u));
    }
    model.prediction = Matrix::Zero(m, data.num_tasks());
    model.bias = Vector::Zero(data.num_tasks());
    const auto v_count = static_cast<Index>(data.num_modalities());
    model.weights = Vector::Constant(v_count, 1.0 / static_cast<double>(v_count));
    return model;
}

/// Smoothed loss plus the three regularizers; the bias is not part of ||W||_F.
inline ObjectiveBreakdown evaluate_objective(const Model& model, const MultiModalDataset& data,
                                             const SolverConfig& config)
{
    ObjectiveBreakdown out;
    out.loss = total_loss(model, data, config.sigma);
    out.reg_w = config.gamma_a * model.prediction.squaredNorm();
    for (const auto& u : model.extraction) out.reg_u += l21_norm(u);
    out.reg_u *= config.gamma_b;
    out.reg_theta = config.gamma_c * model.weights.squaredNorm();
    out.total = out.loss + out.reg_w + out.reg_u + out.reg_theta;
    return out;
}

struct FitResult
{
    Model model;
    TraceRecord trace;
};

/**
 * Alternating minimization: each outer iteration solves for W (tasks in
 * parallel), then sweeps the U_v, then solves for theta, and records the
 * full objective O_k. Stops when |O_{k+1} - O_k| / |O_{k+1} - O_0| < epsilon
 * or after max_outer_iters sweeps.
 */
inline FitResult fit(const MultiModalDataset& data, const SolverConfig& config)
{
    config.validate();
    FitResult out;
    Model& model = out.model;
    TraceRecord& trace = out.trace;
    model = initialize(data, config);
    trace.outer.push_back(evaluate_objective(model, data, config));
    const double o0 = trace.outer.front().total;

    for (int k = 0; k < config.max_outer_iters; ++k) {
        try {
            WUpdate w = solve_W(data, model, config);
            model.prediction = std::move(w.prediction);
            model.bias = std::move(w.bias);
            for (std::size_t p = 0; p < w.tasks.size(); ++p) {
                trace.inner.push_back(InnerTrace{"W", k + 1, static_cast<int>(p), std::move(w.tasks[p].trace),
                                                 w.tasks[p].converged, w.tasks[p].monotonicity_violations,
                                                 w.tasks[p].fallback_steps});
            }

            UUpdate u = solve_all_U(data, model, config);
            model.extraction = std::move(u.extraction);
            for (std::size_t i = 0; i < u.modalities.size(); ++i) {
                auto& r = u.modalities[i];
                trace.inner.push_back(InnerTrace{"U", k + 1, static_cast<int>(i % data.num_modalities()),
                                                 std::move(r.trace), r.converged, r.monotonicity_violations,
                                                 r.fallback_steps});
            }

            const ThetaSubproblem sub = make_theta_subproblem(data, model, config);
            auto th = solve_theta(sub, model.weights, config.epsilon, config.max_inner_iters);
            model.weights = th.solution;
            trace.inner.push_back(InnerTrace{"theta", k + 1, 0, std::move(th.trace), th.converged,
                                             th.monotonicity_violations, th.fallback_steps});
        } catch (const DivergenceError& e) {
            throw DivergenceError("outer iteration " + std::to_string(k + 1) + ": " + e.what());
        }

        trace.outer.push_back(evaluate_objective(model, data, config));
        const double prev = trace.outer[trace.outer.size() - 2].total;
        const double curr = trace.outer.back().total;
        if (detail::relative_change_converged(o0, prev, curr, config.epsilon)) {
            trace.converged = true;
            break;
        }
    }
    return out;
}

} // namespace lm3fe
