#pragma once

#include <algorithm>
#include <cmath>

#include "model.hpp"

namespace lm3fe {

// Smoothed hinge loss
//
//   g(a) = max_{0 <= nu <= 1}  nu (1 - a) - (sigma/2) ||x||_inf nu^2,   a = y * hbar
//
// The maximizer is the clamp of the scaled gap, and substituting it back gives
// a piecewise function that is linear, quadratic, then zero as a grows.

/// Maximizing dual variable for gap = 1 - y*hbar.
inline double compute_nu(double gap, double x_inf, double sigma)
{
    if (!(x_inf > 0.0)) throw DomainError("compute_nu: x_inf must be positive");
    if (!(sigma > 0.0)) throw DomainError("compute_nu: sigma must be positive");
    return std::clamp(gap / (sigma * x_inf), 0.0, 1.0);
}

/// Smoothed hinge value at margin y*hbar.
inline double smoothed_hinge(double margin, double x_inf, double sigma)
{
    if (!(x_inf > 0.0)) throw DomainError("smoothed_hinge: x_inf must be positive");
    if (!(sigma > 0.0)) throw DomainError("smoothed_hinge: sigma must be positive");
    const double gap = 1.0 - margin;
    const double width = sigma * x_inf;
    if (gap <= 0.0) return 0.0;
    if (gap > width) return gap - 0.5 * width;
    return gap * gap / (2.0 * width);
}

namespace detail {

// Shared kernel of the three sub-problems: given margins-to-be scores (N x P)
// and labels, accumulate the loss and fill nu (N x P). Unchecked sizes.
inline double hinge_and_nu(const Matrix& scores, const Matrix& labels, const Vector& x_inf,
                           double sigma, Matrix* nu)
{
    double loss = 0.0;
    if (nu) nu->resize(scores.rows(), scores.cols());
    for (Index p = 0; p < scores.cols(); ++p) {
        for (Index n = 0; n < scores.rows(); ++n) {
            const double margin = labels(n, p) * scores(n, p);
            loss += smoothed_hinge(margin, x_inf(n), sigma);
            if (nu) (*nu)(n, p) = compute_nu(1.0 - margin, x_inf(n), sigma);
        }
    }
    return loss;
}

inline double hinge_and_nu(const Vector& scores, const Vector& labels, const Vector& x_inf,
                           double sigma, Vector* nu)
{
    double loss = 0.0;
    if (nu) nu->resize(scores.size());
    for (Index n = 0; n < scores.size(); ++n) {
        const double margin = labels(n) * scores(n);
        loss += smoothed_hinge(margin, x_inf(n), sigma);
        if (nu) (*nu)(n) = compute_nu(1.0 - margin, x_inf(n), sigma);
    }
    return loss;
}

} // namespace detail

/// Dual variables nu (N x P) at the current model.
inline Matrix compute_nu(const Model& model, const MultiModalDataset& data, double sigma)
{
    model.check_compatible(data);
    Matrix nu;
    detail::hinge_and_nu(decision_scores(model, data), data.labels(), data.sample_inf_norms(), sigma, &nu);
    return nu;
}

/// Empirical loss: sum over tasks and samples of the smoothed hinge.
inline double total_loss(const Model& model, const MultiModalDataset& data, double sigma)
{
    model.check_compatible(data);
    return detail::hinge_and_nu(decision_scores(model, data), data.labels(), data.sample_inf_norms(),
                                sigma, static_cast<Matrix*>(nullptr));
}

} // namespace lm3fe
