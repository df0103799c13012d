#pragma once

#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "config.hpp"
#include "csv.hpp"
#include "evaluation.hpp"
#include "extraction.hpp"
#include "model.hpp"

namespace lm3fe::io {

using nlohmann::json;

/// {"rows": r, "cols": c, "data": [row-major values]}
inline json matrix_to_json(const Matrix& m)
{
    json data = json::array();
    for (Index i = 0; i < m.rows(); ++i)
        for (Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

inline Matrix matrix_from_json(const json& j)
{
    const auto rows = j.at("rows").get<Index>();
    const auto cols = j.at("cols").get<Index>();
    const auto& data = j.at("data");
    if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
        throw IoError("matrix payload: data length does not match shape");
    Matrix m(rows, cols);
    std::size_t k = 0;
    for (Index i = 0; i < rows; ++i)
        for (Index j2 = 0; j2 < cols; ++j2) m(i, j2) = data[k++].get<double>();
    return m;
}

inline json vector_to_json(const Vector& v)
{
    json a = json::array();
    for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline Vector vector_from_json(const json& j)
{
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
    return v;
}

inline json config_to_json(const SolverConfig& c)
{
    return json{{"gamma_a", c.gamma_a},
                {"gamma_b", c.gamma_b},
                {"gamma_c", c.gamma_c},
                {"sigma", c.sigma},
                {"epsilon", c.epsilon},
                {"latent_dim", c.latent_dim},
                {"max_outer_iters", c.max_outer_iters},
                {"max_inner_iters", c.max_inner_iters},
                {"u_sweeps", c.u_sweeps},
                {"d_floor", c.d_floor},
                {"rng_seed", c.rng_seed}};
}

/// Overrides the fields present in `j`; unknown keys are ignored.
inline void config_from_json(const json& j, SolverConfig& c)
{
    auto take = [&](const char* key, auto& field) {
        if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    take("gamma_a", c.gamma_a);
    take("gamma_b", c.gamma_b);
    take("gamma_c", c.gamma_c);
    take("sigma", c.sigma);
    take("epsilon", c.epsilon);
    take("latent_dim", c.latent_dim);
    take("max_outer_iters", c.max_outer_iters);
    take("max_inner_iters", c.max_inner_iters);
    take("u_sweeps", c.u_sweeps);
    take("d_floor", c.d_floor);
    take("rng_seed", c.rng_seed);
}

inline json model_to_json(const Model& model)
{
    json ext = json::array();
    for (const auto& u : model.extraction) ext.push_back(matrix_to_json(u));
    return json{{"format", "lm3fe-model/1"},
                {"latent_dim", model.latent_dim()},
                {"weights", vector_to_json(model.weights)},
                {"bias", vector_to_json(model.bias)},
                {"prediction", matrix_to_json(model.prediction)},
                {"extraction", std::move(ext)}};
}

inline Model model_from_json(const json& j)
{
    Model m;
    try {
        m.weights = vector_from_json(j.at("weights"));
        m.bias = vector_from_json(j.at("bias"));
        m.prediction = matrix_from_json(j.at("prediction"));
        for (const auto& u : j.at("extraction")) m.extraction.push_back(matrix_from_json(u));
    } catch (const json::exception& e) {
        throw IoError(std::string("model: ") + e.what());
    }
    m.validate();
    return m;
}

inline json breakdown_to_json(const ObjectiveBreakdown& b)
{
    return json{{"loss", b.loss}, {"reg_w", b.reg_w}, {"reg_u", b.reg_u}, {"reg_theta", b.reg_theta}, {"total", b.total}};
}

/// JSON array of per-sweep objective breakdowns (O_0 first).
inline json trace_to_json(const TraceRecord& trace)
{
    json a = json::array();
    for (const auto& b : trace.outer) a.push_back(breakdown_to_json(b));
    return a;
}

/// Inner solver histories, for convergence diagnostics.
inline json inner_trace_to_json(const TraceRecord& trace)
{
    json a = json::array();
    for (const auto& t : trace.inner) {
        a.push_back(json{{"stage", t.stage},
                         {"outer_iter", t.outer_iter},
                         {"index", t.index},
                         {"converged", t.converged},
                         {"monotonicity_violations", t.monotonicity_violations},
                         {"fallback_steps", t.fallback_steps},
                         {"objective", t.objective}});
    }
    return a;
}

inline json report_to_json(const EvalReport& r)
{
    json j{{"accuracy", r.accuracy},
           {"macro_f1", r.macro_f1},
           {"per_class_f1", r.per_class_f1},
           {"train_count", r.train_count},
           {"test_count", r.test_count}};
    j["mean_average_precision"] = r.mean_average_precision ? json(*r.mean_average_precision) : json(nullptr);
    return j;
}

/// CSV rows "modality,rank,feature_index,score" (all indices 0-based) under a header line.
inline void write_ranking(std::ostream& out, const FeatureRanking& ranking)
{
    out << "modality,rank,feature_index,score\n";
    for (std::size_t v = 0; v < ranking.size(); ++v) {
        const auto& r = ranking[v];
        for (std::size_t k = 0; k < r.order.size(); ++k)
            out << v << ',' << k << ',' << r.order[k] << ',' << csv::format_double(r.scores(static_cast<Index>(k)))
                << '\n';
    }
}

inline void write_json(const std::filesystem::path& path, const json& j)
{
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

inline json read_json(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw IoError("malformed JSON in " + path.string() + ": " + e.what());
    }
}

inline void write_model(const std::filesystem::path& path, const Model& model)
{
    write_json(path, model_to_json(model));
}

inline Model read_model(const std::filesystem::path& path)
{
    return model_from_json(read_json(path));
}

} // namespace lm3fe::io
