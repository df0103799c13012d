// Command-line front end: fit, select, transform, eval, synth, split, baseline.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include <lm3fe/lm3fe.hpp>

namespace fs = std::filesystem;
using namespace lm3fe;
using nlohmann::json;

namespace {

struct Options
{
    std::string manifest;
    std::string test_manifest;
    std::string config;
    std::string model;
    std::string out = ".";
    std::optional<double> gamma_a, gamma_b, gamma_c, sigma, epsilon;
    std::optional<int> latent_dim, max_outer, max_inner;
    std::optional<std::uint64_t> seed;
    std::vector<double> fractions;
    std::string mode = "knn";
    std::string method = "rfs";
    double gamma = 1.0;
    double train_fraction = 0.5;
    std::uint64_t split_seed = 0;
    bool holdout = false;

    // synth
    int modalities = 3;
    Index samples = 200;
    Index tasks = 5;
    std::vector<Index> dims;
    std::vector<Index> informative;
    double noise = 1.0;
    double separation = 2.0;
    std::string normalization = "unit_range";
};

SolverConfig solver_config(const Options& o)
{
    SolverConfig c;
    if (!o.config.empty()) io::config_from_json(io::read_json(o.config), c);
    if (o.gamma_a) c.gamma_a = *o.gamma_a;
    if (o.gamma_b) c.gamma_b = *o.gamma_b;
    if (o.gamma_c) c.gamma_c = *o.gamma_c;
    if (o.sigma) c.sigma = *o.sigma;
    if (o.epsilon) c.epsilon = *o.epsilon;
    if (o.latent_dim) c.latent_dim = *o.latent_dim;
    if (o.max_outer) c.max_outer_iters = *o.max_outer;
    if (o.max_inner) c.max_inner_iters = *o.max_inner;
    if (o.seed) c.rng_seed = *o.seed;
    c.validate();
    return c;
}

MultiModalDataset load(const std::string& manifest)
{
    if (manifest.empty()) throw ValueError("--manifest is required");
    return Manifest::read(manifest).load();
}

fs::path out_dir(const Options& o)
{
    fs::path dir(o.out);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string());
    return dir;
}

Model load_model(const Options& o, const MultiModalDataset& data)
{
    if (o.model.empty()) throw ValueError("--model is required");
    Model m = io::read_model(o.model);
    m.check_compatible(data, false);
    return m;
}

std::vector<double> fractions_for(const Options& o, std::size_t modalities)
{
    if (o.fractions.size() == 1) return std::vector<double>(modalities, o.fractions.front());
    if (o.fractions.size() != modalities)
        throw ValueError("--fractions needs 1 or " + std::to_string(modalities) + " values, got " +
                         std::to_string(o.fractions.size()));
    return o.fractions;
}

json indices_json(const std::vector<std::vector<Index>>& idx)
{
    json a = json::array();
    for (const auto& v : idx) a.push_back(v);
    return a;
}

/// Train/test feature rows and classes, from either a seeded split or a separate test manifest.
struct EvalSplit
{
    Matrix train, test;
    std::vector<int> train_classes, test_classes;
};

EvalSplit make_split(const Matrix& features, const std::vector<int>& classes, const std::optional<Matrix>& test_features,
                     const std::optional<std::vector<int>>& test_classes, const Options& o)
{
    EvalSplit s;
    if (test_features) {
        s.train = features;
        s.train_classes = classes;
        s.test = *test_features;
        s.test_classes = *test_classes;
        return s;
    }
    const Split sp = train_test_split(features.rows(), o.train_fraction, o.split_seed);
    s.train = features(sp.train, Eigen::all);
    s.test = features(sp.test, Eigen::all);
    for (const Index i : sp.train) s.train_classes.push_back(classes[static_cast<std::size_t>(i)]);
    for (const Index i : sp.test) s.test_classes.push_back(classes[static_cast<std::size_t>(i)]);
    return s;
}

EvalReport knn_report(const EvalSplit& s, int num_classes)
{
    EvalReport r = compute_metrics(knn_classify(s.train, s.train_classes, s.test), s.test_classes, num_classes);
    r.train_count = s.train.rows();
    return r;
}

int cmd_fit(const Options& o)
{
    auto data = load(o.manifest);
    if (o.holdout) data = data.subset(train_test_split(data.num_samples(), o.train_fraction, o.split_seed).train);
    const SolverConfig cfg = solver_config(o);
    const auto result = fit(data, cfg);
    const fs::path dir = out_dir(o);
    io::write_model(dir / "model.json", result.model);
    io::write_json(dir / "trace.json", io::trace_to_json(result.trace));
    io::write_json(dir / "inner_trace.json", io::inner_trace_to_json(result.trace));
    io::write_json(dir / "config.json", io::config_to_json(cfg));
    const auto& outer = result.trace.outer;
    std::cerr << "fit: " << outer.size() - 1 << " sweeps, objective " << outer.front().total << " -> "
              << outer.back().total << (result.trace.converged ? " (converged)" : " (budget exhausted)") << '\n';
    return result.trace.converged ? 0 : 2;
}

int cmd_select(const Options& o)
{
    const auto data = load(o.manifest);
    const Model model = load_model(o, data);
    const auto ranking = rank_features(model);
    const fs::path dir = out_dir(o);
    {
        std::ofstream out(dir / "ranking.csv");
        if (!out) throw IoError("cannot write " + (dir / "ranking.csv").string());
        io::write_ranking(out, ranking);
    }
    if (!o.fractions.empty()) {
        const auto fr = fractions_for(o, data.num_modalities());
        io::write_json(dir / "selected_indices.json", indices_json(selected_indices(ranking, fr)));
        csv::write(dir / "selected.csv", select_features(data, ranking, fr));
    }
    return 0;
}

int cmd_transform(const Options& o)
{
    const auto data = load(o.manifest);
    const Model model = load_model(o, data);
    csv::write(out_dir(o) / "transformed.csv", transform_features(data, model));
    return 0;
}

int cmd_eval(const Options& o)
{
    const auto data = load(o.manifest);
    std::optional<MultiModalDataset> test;
    if (!o.test_manifest.empty()) test = load(o.test_manifest);
    const fs::path dir = out_dir(o);

    if (o.mode == "map") {
        const Model model = load_model(o, data);
        const auto& target = test ? *test : data;
        EvalReport r;
        const Matrix scores = decision_scores(model, target);
        if (test) {
            r.mean_average_precision = mean_average_precision(scores, target.labels());
            r.test_count = target.num_samples();
            r.train_count = data.num_samples();
        } else {
            const Split sp = train_test_split(data.num_samples(), o.train_fraction, o.split_seed);
            r.mean_average_precision =
                mean_average_precision(scores(sp.test, Eigen::all), data.labels()(sp.test, Eigen::all));
            r.test_count = static_cast<Index>(sp.test.size());
            r.train_count = static_cast<Index>(sp.train.size());
        }
        io::write_json(dir / "report.json", io::report_to_json(r));
        return 0;
    }
    if (o.mode != "knn") throw ValueError("unknown --mode '" + o.mode + "' (expected knn or map)");

    // Features: selected subset with --fractions, projection with --model alone, raw concatenation otherwise.
    auto features = [&](const MultiModalDataset& d) -> Matrix {
        if (o.model.empty()) return concatenated_features(d);
        const Model model = load_model(o, d);
        if (!o.fractions.empty())
            return select_features(d, rank_features(model), fractions_for(o, d.num_modalities()));
        return transform_features(d, model);
    };
    const auto classes = class_labels(data.labels());
    std::optional<Matrix> test_x;
    std::optional<std::vector<int>> test_c;
    if (test) {
        if (test->num_tasks() != data.num_tasks()) throw ShapeError("test manifest has a different label count");
        test_x = features(*test);
        test_c = class_labels(test->labels());
    }
    const auto split = make_split(features(data), classes, test_x, test_c, o);
    io::write_json(dir / "report.json", io::report_to_json(knn_report(split, static_cast<int>(data.num_tasks()))));
    return 0;
}

int cmd_synth(const Options& o)
{
    SyntheticSpec spec;
    spec.modalities = o.modalities;
    spec.samples = o.samples;
    spec.tasks = o.tasks;
    spec.dims = o.dims.empty() ? std::vector<Index>(static_cast<std::size_t>(o.modalities), 50) : o.dims;
    spec.informative =
        o.informative.empty() ? std::vector<Index>(static_cast<std::size_t>(o.modalities), 5) : o.informative;
    spec.noise_level = o.noise;
    spec.separation = o.separation;
    spec.normalization = parse_normalization(o.normalization);
    spec.seed = o.seed.value_or(0);
    const auto syn = generate_synthetic(spec);

    const fs::path dir = out_dir(o);
    Manifest m;
    m.encoding = LabelEncoding::zero_one;
    m.normalization = spec.normalization;
    for (std::size_t v = 0; v < syn.raw.size(); ++v) {
        const std::string name = "modality_" + std::to_string(v) + ".csv";
        csv::write(dir / name, syn.raw[v]);
        m.modalities.emplace_back(name);
    }
    csv::write(dir / "labels.csv", ((syn.labels.array() + 1.0) / 2.0).matrix());
    m.labels = "labels.csv";
    m.write(dir / "manifest.json");
    io::write_json(dir / "planted.json", json{{"informative", indices_json(syn.planted)},
                                              {"classes", syn.classes},
                                              {"seed", spec.seed},
                                              {"noise_level", spec.noise_level},
                                              {"separation", spec.separation}});
    return 0;
}

int cmd_split(const Options& o)
{
    const Manifest src = Manifest::read(o.manifest);
    const Matrix labels = csv::read(src.labels);
    const Split sp = train_test_split(labels.rows(), o.train_fraction, o.split_seed);
    const fs::path dir = out_dir(o);
    for (const auto& [name, rows] : {std::pair{"train", sp.train}, std::pair{"test", sp.test}}) {
        const fs::path part = dir / name;
        fs::create_directories(part);
        Manifest m = src;
        m.modalities.clear();
        for (std::size_t v = 0; v < src.modalities.size(); ++v) {
            const Matrix x = csv::read(src.modalities[v]);
            if (x.cols() != labels.rows())
                throw ShapeError(src.modalities[v].string() + ": " + std::to_string(x.cols()) + " samples, expected " +
                                 std::to_string(labels.rows()));
            const std::string file = "modality_" + std::to_string(v) + ".csv";
            csv::write(part / file, x(Eigen::all, rows));
            m.modalities.emplace_back(file);
        }
        csv::write(part / "labels.csv", labels(rows, Eigen::all));
        m.labels = "labels.csv";
        m.write(part / "manifest.json");
    }
    return 0;
}

int cmd_baseline(const Options& o)
{
    const auto data = load(o.manifest);
    std::optional<MultiModalDataset> test;
    if (!o.test_manifest.empty()) test = load(o.test_manifest);
    const fs::path dir = out_dir(o);
    const auto classes = class_labels(data.labels());
    const int p = static_cast<int>(data.num_tasks());

    if (o.method == "bsf" || o.method == "cat") {
        std::vector<Matrix> candidates;
        std::vector<Matrix> test_candidates;
        if (o.method == "cat") {
            candidates.push_back(concatenated_features(data));
            if (test) test_candidates.push_back(concatenated_features(*test));
        } else {
            for (std::size_t v = 0; v < data.num_modalities(); ++v) {
                candidates.emplace_back(data.modality(v).transpose());
                if (test) test_candidates.emplace_back(test->modality(v).transpose());
            }
        }
        std::optional<EvalReport> best;
        std::size_t best_index = 0;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            std::optional<Matrix> tx;
            std::optional<std::vector<int>> tc;
            if (test) {
                tx = test_candidates[i];
                tc = class_labels(test->labels());
            }
            EvalReport r = knn_report(make_split(candidates[i], classes, tx, tc, o), p);
            if (!best || r.accuracy > best->accuracy ||
                (r.accuracy == best->accuracy && r.macro_f1 > best->macro_f1)) {
                best = r;
                best_index = i;
            }
        }
        json j = io::report_to_json(*best);
        if (o.method == "bsf") j["modality"] = best_index;
        io::write_json(dir / "report.json", j);
        return 0;
    }
    if (o.method != "rfs" && o.method != "mtfs")
        throw ValueError("unknown --method '" + o.method + "' (expected rfs, mtfs, bsf or cat)");

    // Without a test manifest, labels of the held-out split stay out of the fit.
    const auto fit_data =
        test ? data : data.subset(train_test_split(data.num_samples(), o.train_fraction, o.split_seed).train);
    ConcatProblem problem{fit_data.concatenated(), fit_data.labels(), o.gamma, true};
    const auto result = o.method == "rfs" ? solve_rfs(problem) : solve_mtfs(problem);
    const auto ranking = rank_stacked(result.weights, data.modality_dims());
    {
        std::ofstream out(dir / "ranking.csv");
        if (!out) throw IoError("cannot write " + (dir / "ranking.csv").string());
        io::write_ranking(out, ranking);
    }
    const std::vector<double> fr =
        o.fractions.empty() ? std::vector<double>(data.num_modalities(), 1.0) : fractions_for(o, data.num_modalities());
    std::optional<Matrix> tx;
    std::optional<std::vector<int>> tc;
    if (test) {
        tx = select_features(*test, ranking, fr);
        tc = class_labels(test->labels());
    }
    json j = io::report_to_json(knn_report(make_split(select_features(data, ranking, fr), classes, tx, tc, o), p));
    j["objective_trace"] = result.trace;
    j["ridge_bumps"] = result.ridge_bumps;
    j["converged"] = result.converged;
    io::write_json(dir / "report.json", j);
    return 0;
}

void add_solver_flags(CLI::App* app, Options& o)
{
    app->add_option("--config", o.config, "JSON file with solver settings (flags override it)");
    app->add_option("--gamma-a", o.gamma_a, "weight of ||W||_F^2");
    app->add_option("--gamma-b", o.gamma_b, "weight of sum_v ||U_v||_{2,1}");
    app->add_option("--gamma-c", o.gamma_c, "weight of ||theta||^2");
    app->add_option("--sigma", o.sigma, "hinge smoothing parameter (default 5)");
    app->add_option("--epsilon", o.epsilon, "relative stopping threshold (default 1e-3)");
    app->add_option("--latent-dim", o.latent_dim, "latent dimension m (default: number of labels)");
    app->add_option("--max-outer", o.max_outer, "outer iteration budget (default 50)");
    app->add_option("--max-inner", o.max_inner, "inner iteration budget (default 500)");
    app->add_option("--seed", o.seed, "random seed");
}

void add_eval_flags(CLI::App* app, Options& o)
{
    app->add_option("--test-manifest", o.test_manifest, "held-out dataset; replaces the random split");
    app->add_option("--train-fraction", o.train_fraction, "train share of the random split")->capture_default_str();
    app->add_option("--split-seed", o.split_seed, "seed of the random split")->capture_default_str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Large-margin multi-modal multi-task feature extraction"};
    app.require_subcommand(1);
    Options o;

    auto* fit_cmd = app.add_subcommand("fit", "fit a model; writes model.json and trace.json");
    fit_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    fit_cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    add_solver_flags(fit_cmd, o);
    fit_cmd->add_flag("--holdout", o.holdout, "fit only the training part of the seeded split");
    fit_cmd->add_option("--train-fraction", o.train_fraction, "train share of the split")->capture_default_str();
    fit_cmd->add_option("--split-seed", o.split_seed, "seed of the split")->capture_default_str();

    auto* select_cmd = app.add_subcommand("select", "rank features; with --fractions also write the selection");
    select_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    select_cmd->add_option("--model", o.model, "fitted model.json")->required();
    select_cmd->add_option("--fractions", o.fractions, "per-modality fractions in (0,1]")->delimiter(',');
    select_cmd->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* transform_cmd = app.add_subcommand("transform", "project samples to the latent space");
    transform_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    transform_cmd->add_option("--model", o.model, "fitted model.json")->required();
    transform_cmd->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* eval_cmd = app.add_subcommand("eval", "1-NN accuracy/macro-F1 or mean average precision");
    eval_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    eval_cmd->add_option("--model", o.model, "fitted model.json (omit to evaluate raw concatenated features)");
    eval_cmd->add_option("--mode", o.mode, "knn or map")->capture_default_str();
    eval_cmd->add_option("--fractions", o.fractions, "select features before 1-NN")->delimiter(',');
    eval_cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    add_eval_flags(eval_cmd, o);

    auto* synth_cmd = app.add_subcommand("synth", "generate a planted benchmark dataset");
    synth_cmd->add_option("--seed", o.seed, "random seed");
    synth_cmd->add_option("--modalities", o.modalities)->capture_default_str();
    synth_cmd->add_option("--samples", o.samples)->capture_default_str();
    synth_cmd->add_option("--tasks", o.tasks, "number of classes")->capture_default_str();
    synth_cmd->add_option("--dims", o.dims, "feature dimension per modality (default 50 each)")->delimiter(',');
    synth_cmd->add_option("--informative", o.informative, "informative rows per modality (default 5 each)")
        ->delimiter(',');
    synth_cmd->add_option("--noise", o.noise, "noise std on informative rows")->capture_default_str();
    synth_cmd->add_option("--separation", o.separation, "std of class means")->capture_default_str();
    synth_cmd->add_option("--normalization", o.normalization, "unit_range, zscore or none")->capture_default_str();
    synth_cmd->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* split_cmd = app.add_subcommand("split", "write train/ and test/ manifests from a seeded row split");
    split_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    split_cmd->add_option("--train-fraction", o.train_fraction, "train share")->capture_default_str();
    split_cmd->add_option("--split-seed", o.split_seed, "seed of the split")->capture_default_str();
    split_cmd->add_option("--out", o.out, "output directory")->capture_default_str();

    auto* base_cmd = app.add_subcommand("baseline", "RFS/MTFS feature selection or the BSF/CAT 1-NN references");
    base_cmd->add_option("--manifest", o.manifest, "dataset manifest")->required();
    base_cmd->add_option("--method", o.method, "rfs, mtfs, bsf or cat")->capture_default_str();
    base_cmd->add_option("--gamma", o.gamma, "l2,1 regularization weight")->capture_default_str();
    base_cmd->add_option("--fractions", o.fractions, "per-modality fractions for rfs/mtfs")->delimiter(',');
    base_cmd->add_option("--out", o.out, "output directory")->capture_default_str();
    add_eval_flags(base_cmd, o);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*fit_cmd) return cmd_fit(o);
        if (*select_cmd) return cmd_select(o);
        if (*transform_cmd) return cmd_transform(o);
        if (*eval_cmd) return cmd_eval(o);
        if (*synth_cmd) return cmd_synth(o);
        if (*split_cmd) return cmd_split(o);
        if (*base_cmd) return cmd_baseline(o);
    } catch (const std::exception& e) {
        std::string msg = e.what();
        for (auto& c : msg)
            if (c == '\n') c = ' ';
        std::cerr << "lm3fe: error: " << msg << '\n';
        return 1;
    }
    return 1;
}
