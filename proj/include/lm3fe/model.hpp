#pragma once

#include <vector>

#include "dataset.hpp"
#include "types.hpp"

namespace lm3fe {

/**
 * Fitted parameters: per-modality extraction matrices U_v (d_v x m), the
 * prediction matrix W (m x P) with biases b (P), and non-negative modality
 * weights theta (V).
 */
struct Model
{
    std::vector<Matrix> extraction;
    Matrix prediction;
    Vector bias;
    Vector weights;

    [[nodiscard]] Index latent_dim() const { return prediction.rows(); }
    [[nodiscard]] Index num_tasks() const { return prediction.cols(); }
    [[nodiscard]] std::size_t num_modalities() const { return extraction.size(); }

    /// Throws ShapeError unless the parts agree with each other.
    void validate() const
    {
        const Index m = prediction.rows();
        if (m <= 0) throw ShapeError("model: latent dimension must be positive");
        if (extraction.empty()) throw ShapeError("model: no extraction matrices");
        for (const auto& u : extraction) {
            if (u.cols() != m) throw ShapeError("model: extraction matrix column count != latent dim");
        }
        detail::require_size(bias, prediction.cols(), "model bias");
        detail::require_size(weights, static_cast<Index>(extraction.size()), "model weights");
        if ((weights.array() < 0.0).any()) throw ValueError("model: negative modality weight");
    }

    /// Throws ShapeError unless the model can be applied to `data`.
    void check_compatible(const MultiModalDataset& data, bool check_tasks = true) const
    {
        validate();
        if (extraction.size() != data.num_modalities())
            throw ShapeError("model has " + std::to_string(extraction.size()) + " modalities, data has " +
                             std::to_string(data.num_modalities()));
        for (std::size_t v = 0; v < extraction.size(); ++v) {
            if (extraction[v].rows() != data.dim(v))
                throw ShapeError("modality " + std::to_string(v) + ": extraction rows " +
                                 std::to_string(extraction[v].rows()) + " != feature dim " +
                                 std::to_string(data.dim(v)));
        }
        if (check_tasks && prediction.cols() != data.num_tasks())
            throw ShapeError("model has " + std::to_string(prediction.cols()) + " tasks, data has " +
                             std::to_string(data.num_tasks()));
    }
};

/// Latent features sum_v theta_v U_v^T X_v as an m x N matrix.
inline Matrix latent_features(const Model& model, const MultiModalDataset& data)
{
    model.check_compatible(data, false);
    Matrix z = Matrix::Zero(model.latent_dim(), data.num_samples());
    for (std::size_t v = 0; v < data.num_modalities(); ++v) {
        const double t = model.weights(static_cast<Index>(v));
        if (t == 0.0) continue;
        z.noalias() += t * (model.extraction[v].transpose() * data.modality(v));
    }
    return z;
}

/// Linear scores hbar_p(x_n) = w_p^T z_n + b_p as an N x P matrix.
inline Matrix decision_scores(const Model& model, const MultiModalDataset& data)
{
    const Matrix z = latent_features(model, data);
    Matrix s = z.transpose() * model.prediction;
    s.rowwise() += model.bias.transpose();
    return s;
}

} // namespace lm3fe
