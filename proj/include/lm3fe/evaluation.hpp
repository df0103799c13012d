#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "parallel.hpp"
#include "types.hpp"

namespace lm3fe {

struct EvalReport
{
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    std::vector<double> per_class_f1;
    std::optional<double> mean_average_precision;
    Index train_count = 0;
    Index test_count = 0;
};

/// Class index of each sample: the first task with a +1 label.
inline std::vector<int> class_labels(const Matrix& labels)
{
    std::vector<int> out(static_cast<std::size_t>(labels.rows()));
    for (Index n = 0; n < labels.rows(); ++n) {
        Index p = 0;
        while (p < labels.cols() && labels(n, p) != 1.0) ++p;
        if (p == labels.cols()) throw ValueError("sample " + std::to_string(n) + " has no positive label");
        out[static_cast<std::size_t>(n)] = static_cast<int>(p);
    }
    return out;
}

/**
 * k-nearest-neighbour classification under the Euclidean metric. Rows are
 * samples. Neighbours at equal distance are ordered by train index; a tied
 * vote goes to the class of the nearest voter among the tied classes.
 */
inline std::vector<int> knn_classify(const Matrix& train, const std::vector<int>& train_labels, const Matrix& test,
                                     int k = 1)
{
    if (train.rows() == 0) throw ValueError("knn_classify: empty training set");
    if (static_cast<std::size_t>(train.rows()) != train_labels.size())
        throw ShapeError("knn_classify: train labels/rows mismatch");
    if (train.cols() != test.cols()) throw ShapeError("knn_classify: feature dimension mismatch");
    if (k < 1) throw ValueError("knn_classify: k must be positive");
    const auto kk = static_cast<std::size_t>(std::min<Index>(k, train.rows()));

    std::vector<int> out(static_cast<std::size_t>(test.rows()));
    parallel_for(out.size(), [&](std::size_t t) {
        const auto row = test.row(static_cast<Index>(t));
        std::vector<std::pair<double, Index>> dist(static_cast<std::size_t>(train.rows()));
        for (Index i = 0; i < train.rows(); ++i)
            dist[static_cast<std::size_t>(i)] = {(train.row(i) - row).squaredNorm(), i};
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(kk), dist.end());
        if (kk == 1) {
            out[t] = train_labels[static_cast<std::size_t>(dist.front().second)];
            return;
        }
        std::vector<std::pair<int, std::size_t>> votes; // (class, count), first-seen order = nearest first
        for (std::size_t j = 0; j < kk; ++j) {
            const int c = train_labels[static_cast<std::size_t>(dist[j].second)];
            auto it = std::find_if(votes.begin(), votes.end(), [c](const auto& v) { return v.first == c; });
            if (it == votes.end()) votes.emplace_back(c, 1);
            else ++it->second;
        }
        auto best = votes.begin();
        for (auto it = votes.begin(); it != votes.end(); ++it)
            if (it->second > best->second) best = it;
        out[t] = best->first;
    });
    return out;
}

/// Accuracy, per-class F1 (0 when precision + recall = 0) and their unweighted mean.
inline EvalReport compute_metrics(const std::vector<int>& predicted, const std::vector<int>& truth, int num_classes)
{
    if (predicted.size() != truth.size()) throw ShapeError("compute_metrics: length mismatch");
    if (truth.empty()) throw ValueError("compute_metrics: no samples");
    if (num_classes <= 0) throw ValueError("compute_metrics: no classes");
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (truth[i] < 0 || truth[i] >= num_classes || predicted[i] < 0 || predicted[i] >= num_classes)
            throw ValueError("compute_metrics: label outside [0, num_classes)");
    }
    const auto c = static_cast<std::size_t>(num_classes);
    std::vector<double> tp(c, 0.0), fp(c, 0.0), fn(c, 0.0);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const auto t = static_cast<std::size_t>(truth[i]);
        const auto p = static_cast<std::size_t>(predicted[i]);
        if (t == p) {
            ++correct;
            tp[t] += 1.0;
        } else {
            fp[p] += 1.0;
            fn[t] += 1.0;
        }
    }
    EvalReport r;
    r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());
    r.per_class_f1.resize(c);
    for (std::size_t k = 0; k < c; ++k) {
        const double precision = tp[k] + fp[k] > 0.0 ? tp[k] / (tp[k] + fp[k]) : 0.0;
        const double recall = tp[k] + fn[k] > 0.0 ? tp[k] / (tp[k] + fn[k]) : 0.0;
        r.per_class_f1[k] = precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    r.macro_f1 = std::accumulate(r.per_class_f1.begin(), r.per_class_f1.end(), 0.0) / static_cast<double>(c);
    r.test_count = static_cast<Index>(truth.size());
    return r;
}

/**
 * Average of precision@rank over the ranks of the positive items, ranking
 * by descending score (ties by index). Returns 0 when there are no positives.
 */
inline double average_precision(const Vector& scores, const std::vector<bool>& relevant)
{
    if (static_cast<std::size_t>(scores.size()) != relevant.size())
        throw ShapeError("average_precision: length mismatch");
    std::vector<Index> order(relevant.size());
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return scores(a) > scores(b); });
    double hits = 0.0, sum = 0.0;
    for (std::size_t r = 0; r < order.size(); ++r) {
        if (relevant[static_cast<std::size_t>(order[r])]) {
            hits += 1.0;
            sum += hits / static_cast<double>(r + 1);
        }
    }
    return hits > 0.0 ? sum / hits : 0.0;
}

/// Mean over tasks of the average precision of each score column against the +1 labels.
inline double mean_average_precision(const Matrix& scores, const Matrix& labels)
{
    detail::require_shape(scores, labels.rows(), labels.cols(), "mean_average_precision scores");
    if (labels.cols() == 0) throw ValueError("mean_average_precision: no labels");
    double total = 0.0;
    for (Index p = 0; p < labels.cols(); ++p) {
        std::vector<bool> rel(static_cast<std::size_t>(labels.rows()));
        for (Index n = 0; n < labels.rows(); ++n) rel[static_cast<std::size_t>(n)] = labels(n, p) == 1.0;
        total += average_precision(scores.col(p), rel);
    }
    return total / static_cast<double>(labels.cols());
}

struct Split
{
    std::vector<Index> train;
    std::vector<Index> test;
};

/// Seeded random partition; both parts keep ascending sample order.
inline Split train_test_split(Index n, double train_fraction, std::uint64_t seed)
{
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw ValueError("train fraction must lie in (0,1)");
    if (n < 2) throw ValueError("train_test_split: need at least two samples");
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::mt19937_64 rng(seed);
    for (std::size_t i = perm.size() - 1; i > 0; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i);
        std::swap(perm[i], perm[pick(rng)]);
    }
    auto n_train = static_cast<Index>(std::llround(train_fraction * static_cast<double>(n)));
    n_train = std::clamp<Index>(n_train, 1, n - 1);
    Split s;
    s.train.assign(perm.begin(), perm.begin() + n_train);
    s.test.assign(perm.begin() + n_train, perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

/// 1-NN on sample-major features split into train/test rows.
inline EvalReport evaluate_knn(const Matrix& features, const std::vector<int>& classes, const Split& split,
                               int num_classes, int k = 1)
{
    if (static_cast<std::size_t>(features.rows()) != classes.size())
        throw ShapeError("evaluate_knn: features/classes mismatch");
    const Matrix train = features(split.train, Eigen::all);
    const Matrix test = features(split.test, Eigen::all);
    std::vector<int> train_c, test_c;
    for (const Index i : split.train) train_c.push_back(classes[static_cast<std::size_t>(i)]);
    for (const Index i : split.test) test_c.push_back(classes[static_cast<std::size_t>(i)]);
    EvalReport r = compute_metrics(knn_classify(train, train_c, test, k), test_c, num_classes);
    r.train_count = static_cast<Index>(split.train.size());
    return r;
}

} // namespace lm3fe
