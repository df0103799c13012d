#pragma once

#include <cmath>
#include <vector>

namespace lm3fe {

/// Output of an inner solver: the returned point plus its objective history.
template <class T>
struct SolveResult
{
    T solution;
    double objective = 0.0;         ///< objective at `solution`
    std::vector<double> trace;      ///< objective of every iterate, initial point first
    bool converged = false;         ///< stopping rule met before the budget ran out
    int monotonicity_violations = 0;
    int fallback_steps = 0;
};

namespace detail {

/// |f_next - f_curr| / |f_next - f_init| < eps, with an absolute guard for
/// the degenerate case where the denominator vanishes.
inline bool relative_change_converged(double f_init, double f_curr, double f_next, double eps)
{
    const double step = std::abs(f_next - f_curr);
    if (step < 1e-15) return true;
    const double total = std::abs(f_next - f_init);
    if (total == 0.0) return false;
    return step / total < eps;
}

} // namespace detail
} // namespace lm3fe
