#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "model.hpp"

namespace lm3fe {

/// Features of one modality ordered by descending row norm of U_v.
struct ModalityRanking
{
    std::vector<Index> order; ///< order[r] = feature index at rank r (0-based)
    Vector scores;            ///< scores(r) = row norm of feature order[r]
};

using FeatureRanking = std::vector<ModalityRanking>;

/// Stable descending sort of the row norms; ties keep ascending index order.
inline ModalityRanking rank_rows(const Matrix& u)
{
    const Vector norms = u.rowwise().norm();
    ModalityRanking r;
    r.order.resize(static_cast<std::size_t>(norms.size()));
    std::iota(r.order.begin(), r.order.end(), Index{0});
    std::stable_sort(r.order.begin(), r.order.end(), [&](Index a, Index b) { return norms(a) > norms(b); });
    r.scores.resize(norms.size());
    for (std::size_t i = 0; i < r.order.size(); ++i) r.scores(static_cast<Index>(i)) = norms(r.order[i]);
    return r;
}

inline FeatureRanking rank_features(const Model& model)
{
    FeatureRanking out;
    out.reserve(model.extraction.size());
    for (const auto& u : model.extraction) out.push_back(rank_rows(u));
    return out;
}

/// Splits a stacked (sum d_v) x P weight matrix by modality and ranks each block.
inline FeatureRanking rank_stacked(const Matrix& u, const std::vector<Index>& dims)
{
    FeatureRanking out;
    Index offset = 0;
    for (const Index d : dims) {
        if (offset + d > u.rows()) throw ShapeError("rank_stacked: modality dims exceed weight rows");
        out.push_back(rank_rows(u.middleRows(offset, d)));
        offset += d;
    }
    return out;
}

/// ceil(r * d), robust to representation error in r (0.3 * 50 is 15, not 16).
inline Index selection_count(double fraction, Index dim)
{
    if (!(fraction > 0.0 && fraction <= 1.0)) throw ValueError("selection fraction must lie in (0,1]");
    const double raw = fraction * static_cast<double>(dim);
    const auto k = static_cast<Index>(std::ceil(raw - 1e-9 * std::max(1.0, raw)));
    return std::clamp<Index>(k, 1, dim);
}

/// Top ceil(r_v d_v) feature indices of every modality, in rank order.
inline std::vector<std::vector<Index>> selected_indices(const FeatureRanking& ranking,
                                                        const std::vector<double>& fractions)
{
    if (fractions.size() != ranking.size())
        throw ValueError("select_features: " + std::to_string(fractions.size()) + " fractions for " +
                         std::to_string(ranking.size()) + " modalities");
    std::vector<std::vector<Index>> out;
    for (std::size_t v = 0; v < ranking.size(); ++v) {
        const auto& order = ranking[v].order;
        if (order.empty()) throw ValueError("select_features: empty ranking");
        const Index k = selection_count(fractions[v], static_cast<Index>(order.size()));
        out.emplace_back(order.begin(), order.begin() + k);
    }
    return out;
}

/// Selected features of all modalities concatenated, one sample per row (N x k).
inline Matrix select_features(const MultiModalDataset& data, const FeatureRanking& ranking,
                              const std::vector<double>& fractions)
{
    if (ranking.size() != data.num_modalities()) throw ShapeError("select_features: ranking/modality count");
    const auto kept = selected_indices(ranking, fractions);
    Index total = 0;
    for (std::size_t v = 0; v < kept.size(); ++v) {
        if (static_cast<Index>(ranking[v].order.size()) != data.dim(v))
            throw ShapeError("select_features: ranking size != modality dim for modality " + std::to_string(v));
        total += static_cast<Index>(kept[v].size());
    }
    if (total == 0) throw ValueError("select_features: empty selection");
    Matrix out(data.num_samples(), total);
    Index col = 0;
    for (std::size_t v = 0; v < kept.size(); ++v) {
        for (const Index i : kept[v]) out.col(col++) = data.modality(v).row(i).transpose();
    }
    return out;
}

/// Projected features sum_v theta_v U_v^T x_n, one sample per row (N x m).
inline Matrix transform_features(const MultiModalDataset& data, const Model& model)
{
    return latent_features(model, data).transpose();
}

/// All modalities concatenated, one sample per row (N x sum d_v).
inline Matrix concatenated_features(const MultiModalDataset& data)
{
    return data.concatenated().transpose();
}

} // namespace lm3fe
