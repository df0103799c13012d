#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "types.hpp"

namespace lm3fe {

enum class LabelEncoding { zero_one, pm_one };
enum class Normalization { none, unit_range, zscore };

/**
 * Per-row feature scaling.
 *
 * unit_range maps each row affinely onto [0, 1]; zscore centres each row and
 * divides by the population standard deviation. Constant rows become zero
 * under either scheme.
 */
inline std::vector<Matrix> normalize_features(std::vector<Matrix> raw, Normalization scheme)
{
    for (auto& x : raw) {
        if (x.size() == 0) throw ValueError("normalize_features: empty matrix");
        if (scheme == Normalization::none) continue;
        for (Index i = 0; i < x.rows(); ++i) {
            auto row = x.row(i);
            if (scheme == Normalization::unit_range) {
                const double lo = row.minCoeff();
                const double span = row.maxCoeff() - lo;
                if (span > 0.0) row = (row.array() - lo) / span;
                else row.setZero();
            } else {
                const double mean = row.mean();
                const double var = (row.array() - mean).square().mean();
                if (var > 0.0) row = (row.array() - mean) / std::sqrt(var);
                else row.setZero();
            }
        }
    }
    return raw;
}

/**
 * Multi-modal training data: V feature matrices (d_v x N, one sample per
 * column) sharing a common N x P label matrix with entries in {+1, -1}.
 *
 * Immutable after construction. The constructor validates shapes, label
 * values and the non-degeneracy of every sample, then caches the infinity
 * norm of each concatenated sample.
 */
class MultiModalDataset
{
public:
    MultiModalDataset(std::vector<Matrix> modalities, Matrix labels)
        : modalities_(std::move(modalities)), labels_(std::move(labels))
    {
        if (modalities_.empty()) throw ShapeError("dataset: at least one modality required");
        const Index n = modalities_.front().cols();
        if (n == 0) throw ShapeError("dataset: no samples");
        for (std::size_t v = 0; v < modalities_.size(); ++v) {
            if (modalities_[v].cols() != n) {
                throw ShapeError("dataset: modality " + std::to_string(v) + " has " +
                                 std::to_string(modalities_[v].cols()) + " samples, expected " +
                                 std::to_string(n));
            }
            if (modalities_[v].rows() == 0) {
                throw ShapeError("dataset: modality " + std::to_string(v) + " has no features");
            }
        }
        if (labels_.rows() != n) {
            throw ShapeError("dataset: labels have " + std::to_string(labels_.rows()) +
                             " rows, expected " + std::to_string(n));
        }
        if (labels_.cols() == 0) throw ShapeError("dataset: labels have no columns");
        for (Index i = 0; i < labels_.rows(); ++i)
            for (Index p = 0; p < labels_.cols(); ++p)
                if (labels_(i, p) != 1.0 && labels_(i, p) != -1.0)
                    throw ValueError("dataset: label entry (" + std::to_string(i) + "," +
                                     std::to_string(p) + ") is not +1/-1");

        inf_norms_ = Vector::Zero(n);
        for (const auto& x : modalities_) {
            inf_norms_ = inf_norms_.cwiseMax(x.cwiseAbs().colwise().maxCoeff().transpose());
        }
        for (Index i = 0; i < n; ++i) {
            if (!(inf_norms_(i) > 0.0)) {
                throw DegenerateSampleError("dataset: sample " + std::to_string(i) +
                                            " has an all-zero feature vector");
            }
        }
    }

    [[nodiscard]] Index num_samples() const { return labels_.rows(); }
    [[nodiscard]] Index num_tasks() const { return labels_.cols(); }
    [[nodiscard]] std::size_t num_modalities() const { return modalities_.size(); }
    [[nodiscard]] Index dim(std::size_t v) const { return modalities_.at(v).rows(); }

    [[nodiscard]] std::vector<Index> modality_dims() const
    {
        std::vector<Index> dims;
        dims.reserve(modalities_.size());
        for (const auto& x : modalities_) dims.push_back(x.rows());
        return dims;
    }

    [[nodiscard]] const std::vector<Matrix>& modalities() const { return modalities_; }
    [[nodiscard]] const Matrix& modality(std::size_t v) const { return modalities_.at(v); }
    [[nodiscard]] const Matrix& labels() const { return labels_; }
    [[nodiscard]] const Vector& sample_inf_norms() const { return inf_norms_; }

    /// All modalities stacked vertically: (sum d_v) x N.
    [[nodiscard]] Matrix concatenated() const
    {
        Index total = 0;
        for (const auto& x : modalities_) total += x.rows();
        Matrix out(total, num_samples());
        Index offset = 0;
        for (const auto& x : modalities_) {
            out.middleRows(offset, x.rows()) = x;
            offset += x.rows();
        }
        return out;
    }

    /// Column subset, e.g. for train/test splits.
    [[nodiscard]] MultiModalDataset subset(const std::vector<Index>& samples) const
    {
        std::vector<Matrix> mods;
        mods.reserve(modalities_.size());
        for (const auto& x : modalities_) mods.emplace_back(x(Eigen::all, samples));
        return MultiModalDataset(std::move(mods), labels_(samples, Eigen::all));
    }

private:
    std::vector<Matrix> modalities_;
    Matrix labels_;
    Vector inf_norms_;
};

/// Maps a raw label matrix to {+1, -1}; zero_one sends 0 to -1.
inline Matrix encode_labels(const Matrix& raw, LabelEncoding encoding)
{
    Matrix y(raw.rows(), raw.cols());
    for (Index i = 0; i < raw.rows(); ++i) {
        for (Index p = 0; p < raw.cols(); ++p) {
            const double v = raw(i, p);
            if (encoding == LabelEncoding::zero_one) {
                if (v == 1.0) y(i, p) = 1.0;
                else if (v == 0.0) y(i, p) = -1.0;
                else throw ValueError("label (" + std::to_string(i) + "," + std::to_string(p) +
                                      ") is not 0/1");
            } else {
                if (v == 1.0 || v == -1.0) y(i, p) = v;
                else throw ValueError("label (" + std::to_string(i) + "," + std::to_string(p) +
                                      ") is not +1/-1");
            }
        }
    }
    return y;
}

inline LabelEncoding parse_encoding(const std::string& s)
{
    if (s == "zero_one") return LabelEncoding::zero_one;
    if (s == "pm_one") return LabelEncoding::pm_one;
    throw ValueError("unknown label encoding '" + s + "'");
}

inline Normalization parse_normalization(const std::string& s)
{
    if (s == "unit_range") return Normalization::unit_range;
    if (s == "zscore") return Normalization::zscore;
    if (s == "none") return Normalization::none;
    throw ValueError("unknown normalization '" + s + "'");
}

inline const char* to_string(LabelEncoding e) { return e == LabelEncoding::zero_one ? "zero_one" : "pm_one"; }

inline const char* to_string(Normalization n)
{
    switch (n) {
    case Normalization::unit_range: return "unit_range";
    case Normalization::zscore: return "zscore";
    default: return "none";
    }
}

/// Reads modality CSVs (d_v x N) and a label CSV (N x P), normalizes and validates.
inline MultiModalDataset load_dataset(const std::vector<std::filesystem::path>& modality_paths,
                                      const std::filesystem::path& label_path,
                                      LabelEncoding encoding,
                                      Normalization scheme = Normalization::unit_range)
{
    if (modality_paths.empty()) throw ValueError("load_dataset: no modality files");
    std::vector<Matrix> raw;
    raw.reserve(modality_paths.size());
    for (const auto& p : modality_paths) raw.push_back(csv::read(p));
    const Index n = raw.front().cols();
    for (std::size_t v = 0; v < raw.size(); ++v) {
        if (raw[v].cols() != n) {
            throw ShapeError(modality_paths[v].string() + ": " + std::to_string(raw[v].cols()) +
                             " samples, expected " + std::to_string(n));
        }
    }
    Matrix labels = encode_labels(csv::read(label_path), encoding);
    return MultiModalDataset(normalize_features(std::move(raw), scheme), std::move(labels));
}

/**
 * Dataset manifest (JSON):
 *   { "modalities": ["a.csv", ...], "labels": "y.csv",
 *     "encoding": "zero_one" | "pm_one", "normalization": "unit_range" | "zscore" | "none" }
 * Relative paths resolve against the manifest's directory.
 */
struct Manifest
{
    std::vector<std::filesystem::path> modalities;
    std::filesystem::path labels;
    LabelEncoding encoding = LabelEncoding::zero_one;
    Normalization normalization = Normalization::unit_range;

    static Manifest read(const std::filesystem::path& path)
    {
        std::ifstream in(path);
        if (!in) throw IoError("cannot open manifest " + path.string());
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw IoError("malformed manifest " + path.string() + ": " + e.what());
        }
        const auto base = path.parent_path();
        auto resolve = [&](const std::string& s) {
            std::filesystem::path p(s);
            return p.is_absolute() ? p : base / p;
        };
        Manifest m;
        try {
            for (const auto& s : j.at("modalities")) m.modalities.push_back(resolve(s.get<std::string>()));
            m.labels = resolve(j.at("labels").get<std::string>());
            if (j.contains("encoding")) m.encoding = parse_encoding(j["encoding"].get<std::string>());
            if (j.contains("normalization"))
                m.normalization = parse_normalization(j["normalization"].get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw IoError("manifest " + path.string() + ": " + e.what());
        }
        return m;
    }

    void write(const std::filesystem::path& path) const
    {
        nlohmann::json j;
        j["modalities"] = nlohmann::json::array();
        for (const auto& p : modalities) j["modalities"].push_back(p.generic_string());
        j["labels"] = labels.generic_string();
        j["encoding"] = to_string(encoding);
        j["normalization"] = to_string(normalization);
        std::ofstream out(path);
        if (!out) throw IoError("cannot write " + path.string());
        out << j.dump(2) << '\n';
    }

    [[nodiscard]] MultiModalDataset load() const
    {
        return load_dataset(modalities, labels, encoding, normalization);
    }
};

} // namespace lm3fe
