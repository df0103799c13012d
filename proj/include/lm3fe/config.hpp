#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace lm3fe {

/// Trade-off parameters and iteration budgets of the alternating solver.
struct SolverConfig
{
    double gamma_a = 1.0;  ///< ||W||_F^2 weight
    double gamma_b = 1.0;  ///< sum_v ||U_v||_{2,1} weight
    double gamma_c = 1.0;  ///< ||theta||^2 weight
    double sigma = 5.0;    ///< hinge smoothing parameter
    double epsilon = 1e-3; ///< relative-change stopping threshold, shared by all loops
    int latent_dim = 0;    ///< m; 0 means "use the number of tasks P"
    int max_outer_iters = 50;
    int max_inner_iters = 500;
    int u_sweeps = 1;      ///< alternating passes over modalities per outer iteration
    double d_floor = 1e-12;
    std::uint64_t rng_seed = 0;

    void validate() const
    {
        if (!(gamma_a > 0.0) || !(gamma_b > 0.0) || !(gamma_c > 0.0))
            throw ValueError("config: trade-off parameters must be strictly positive");
        if (!(sigma > 0.0)) throw ValueError("config: sigma must be positive");
        if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ValueError("config: epsilon must lie in (0,1]");
        if (latent_dim < 0) throw ValueError("config: latent_dim must be positive");
        if (max_outer_iters <= 0 || max_inner_iters <= 0 || u_sweeps <= 0)
            throw ValueError("config: iteration budgets must be positive");
        if (!(d_floor > 0.0)) throw ValueError("config: d_floor must be positive");
    }
};

/// Objective sequence of one inner solver run.
struct InnerTrace
{
    std::string stage;              ///< "W", "U", "theta"
    int outer_iter = 0;
    int index = 0;                  ///< task p for "W", modality v for "U", 0 for "theta"
    std::vector<double> objective;  ///< objective of every iterate, starting with the initial point
    bool converged = false;
    int monotonicity_violations = 0; ///< iterations where the objective rose beyond slack
    int fallback_steps = 0;          ///< "U" only: accelerated steps replaced by the plain gradient step
};

/// Per-sweep objective breakdown; see evaluate_objective.
struct ObjectiveBreakdown
{
    double loss = 0.0;
    double reg_w = 0.0;
    double reg_u = 0.0;
    double reg_theta = 0.0;
    double total = 0.0;
};

struct TraceRecord
{
    std::vector<ObjectiveBreakdown> outer; ///< O_0 (initial model) followed by one entry per sweep
    std::vector<InnerTrace> inner;
    bool converged = false;

    [[nodiscard]] std::vector<double> outer_objective() const
    {
        std::vector<double> o;
        o.reserve(outer.size());
        for (const auto& b : outer) o.push_back(b.total);
        return o;
    }
};

} // namespace lm3fe
