#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "dataset.hpp"

namespace lm3fe {

/// Planted multi-modal classification benchmark.
struct SyntheticSpec
{
    int modalities = 3;
    Index samples = 200;
    Index tasks = 5;                      ///< classes; each sample belongs to exactly one
    std::vector<Index> dims{50, 50, 50};  ///< d_v
    std::vector<Index> informative{5, 5, 5};
    double noise_level = 1.0;             ///< std of the noise on informative rows
    double separation = 2.0;              ///< std of the class means on informative rows
    Normalization normalization = Normalization::unit_range;
    std::uint64_t seed = 0;

    void validate() const
    {
        if (modalities <= 0) throw ValueError("synthetic: need at least one modality");
        if (samples < 2 || tasks < 1) throw ValueError("synthetic: need N >= 2 and P >= 1");
        if (dims.size() != static_cast<std::size_t>(modalities) ||
            informative.size() != static_cast<std::size_t>(modalities))
            throw ValueError("synthetic: dims/informative must list one entry per modality");
        for (int v = 0; v < modalities; ++v) {
            const auto i = static_cast<std::size_t>(v);
            if (dims[i] <= 0) throw ValueError("synthetic: modality dims must be positive");
            if (informative[i] < 0 || informative[i] > dims[i])
                throw ValueError("synthetic: informative count exceeds modality dim");
        }
        if (noise_level < 0.0 || separation < 0.0) throw ValueError("synthetic: negative scale");
    }
};

struct SyntheticData
{
    std::vector<Matrix> raw;                 ///< un-normalized modality matrices, d_v x N
    Matrix labels;                           ///< N x P, +-1 one-vs-all
    std::vector<int> classes;                ///< class of each sample
    std::vector<std::vector<Index>> planted; ///< informative feature indices per modality, ascending
    MultiModalDataset data;                  ///< normalized, ready for the solver
};

/**
 * Informative rows carry a class-dependent mean (drawn once per row and
 * class from N(0, separation^2)) plus N(0, noise_level^2) noise; all other
 * rows are N(0, 1) noise independent of the class. Classes are assigned
 * round-robin and then shuffled, so every class has floor(N/P) or more samples.
 */
inline SyntheticData generate_synthetic(const SyntheticSpec& spec)
{
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = spec.samples;

    std::vector<int> classes(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) classes[static_cast<std::size_t>(i)] = static_cast<int>(i % spec.tasks);
    for (std::size_t i = classes.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(classes[i], classes[pick(rng)]);
    }
    Matrix labels = Matrix::Constant(n, spec.tasks, -1.0);
    for (Index i = 0; i < n; ++i) labels(i, classes[static_cast<std::size_t>(i)]) = 1.0;

    std::vector<Matrix> raw;
    std::vector<std::vector<Index>> planted;
    for (int v = 0; v < spec.modalities; ++v) {
        const Index d = spec.dims[static_cast<std::size_t>(v)];
        const Index k = spec.informative[static_cast<std::size_t>(v)];
        std::vector<Index> perm(static_cast<std::size_t>(d));
        std::iota(perm.begin(), perm.end(), Index{0});
        for (std::size_t i = perm.size() - 1; i > 0; --i) {
            std::uniform_int_distribution<std::size_t> pick(0, i);
            std::swap(perm[i], perm[pick(rng)]);
        }
        std::vector<Index> chosen(perm.begin(), perm.begin() + k);
        std::sort(chosen.begin(), chosen.end());

        Matrix x(d, n);
        std::vector<bool> is_informative(static_cast<std::size_t>(d), false);
        for (const Index i : chosen) is_informative[static_cast<std::size_t>(i)] = true;
        for (Index i = 0; i < d; ++i) {
            if (is_informative[static_cast<std::size_t>(i)]) {
                Vector means(spec.tasks);
                for (Index c = 0; c < spec.tasks; ++c) means(c) = spec.separation * normal(rng);
                for (Index s = 0; s < n; ++s)
                    x(i, s) = means(classes[static_cast<std::size_t>(s)]) + spec.noise_level * normal(rng);
            } else {
                for (Index s = 0; s < n; ++s) x(i, s) = normal(rng);
            }
        }
        raw.push_back(std::move(x));
        planted.push_back(std::move(chosen));
    }
    MultiModalDataset data(normalize_features(raw, spec.normalization), labels);
    return SyntheticData{std::move(raw), std::move(labels), std::move(classes), std::move(planted), std::move(data)};
}

/// |top-k of ranking ∩ planted| / k with k = |planted|.
inline double precision_at_planted(const std::vector<Index>& order, const std::vector<Index>& planted)
{
    if (planted.empty()) return 1.0;
    const std::size_t k = std::min(planted.size(), order.size());
    std::size_t hits = 0;
    for (std::size_t r = 0; r < k; ++r)
        if (std::find(planted.begin(), planted.end(), order[r]) != planted.end()) ++hits;
    return static_cast<double>(hits) / static_cast<double>(planted.size());
}

} // namespace lm3fe
