// Command-line front end: scene synthesis, tree construction, EM training,
// MAP inference, baselines, metrics, and runtime benchmarking.

#include "floodtree/baselines.hpp"
#include "floodtree/em.hpp"
#include "floodtree/map_inference.hpp"
#include "floodtree/metrics.hpp"
#include "floodtree/raster.hpp"
#include "floodtree/split_tree.hpp"
#include "floodtree/synth.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace floodtree;

namespace {

struct Options {
    std::string elevation;
    std::vector<std::string> features;
    std::string mask;
    std::string train_csv;
    std::string truth;
    std::string model_path;
    std::string pred;
    std::string out_dir = ".";
    std::string method = "structure-multi";
    int k0 = 2, k1 = 2;
    double pi0 = 0.5, rho0 = 0.999;
    int max_iter = 40;
    double tol = 1e-4;
    std::uint64_t seed = 1;
    int threads = 0;
    // synth / bench
    std::string scene_config;
    int rows = 128, cols = 128;
    std::string terrain = "fractal";
    double observe_fraction = 0.1;
    std::string pattern = "random";
    double flood_quantile = 0.5;
    std::vector<std::int64_t> bench_sizes = {250000, 500000, 1000000, 2000000, 4000000};
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RasterStack load_stack(const Options& opt, bool need_truth = false) {
    if (opt.elevation.empty()) throw std::runtime_error("--elevation is required");
    if (opt.features.empty()) throw std::runtime_error("--features is required");
    RasterGrid elev = read_ascii_grid(opt.elevation);
    std::vector<RasterGrid> bands;
    for (const auto& f : opt.features) bands.push_back(read_ascii_grid(f));
    std::optional<RasterGrid> truth;
    if (!opt.truth.empty()) truth = read_ascii_grid(opt.truth);
    if (need_truth && !truth) throw std::runtime_error("--truth is required");
    if (!opt.mask.empty()) {
        RasterGrid mask = read_ascii_grid(opt.mask);
        for (auto& band : bands) {
            if (mask.rows != band.rows || mask.cols != band.cols)
                throw std::runtime_error("mask grid dimensions do not match features");
            for (std::size_t n = 0; n < band.cell_count(); ++n)
                if (mask.values[n] == 0.0 || mask.is_nodata(n)) band.values[n] = band.nodata_value;
        }
    }
    return assemble_stack(std::move(elev), std::move(bands), std::move(truth));
}

// Forces K=1 for the single-modal method; warns when flags disagree.
void reconcile_method(Options& opt) {
    if (opt.method == "structure-single" && (opt.k0 != 1 || opt.k1 != 1)) {
        std::cerr << "warning: method structure-single forces --k0 1 --k1 1\n";
        opt.k0 = opt.k1 = 1;
    }
}

ModelParams train_structure(const Options& opt, const SplitTree& tree, const RasterStack& stack,
                            const TrainingSet& train, EmTrace& trace) {
    ModelParams init = initialize(train, opt.k0, opt.k1, opt.pi0, opt.rho0, opt.seed);
    EmOptions em_opts;
    em_opts.max_iterations = opt.max_iter;
    em_opts.tol = opt.tol;
    em_opts.threads = opt.threads;
    auto [params, t] = run_em(tree, stack, std::move(init), em_opts);
    trace = std::move(t);
    return params;
}

void write_manifest(const Options& opt, const fs::path& path,
                    const std::vector<std::pair<std::string, std::string>>& extra) {
    std::ofstream out(path);
    out << "method = " << opt.method << "\n";
    out << "k0 = " << opt.k0 << "\n";
    out << "k1 = " << opt.k1 << "\n";
    out << "pi0 = " << opt.pi0 << "\n";
    out << "rho0 = " << opt.rho0 << "\n";
    out << "max_iter = " << opt.max_iter << "\n";
    out << "tol = " << opt.tol << "\n";
    out << "seed = " << opt.seed << "\n";
    out << "threads = " << opt.threads << "\n";
    for (const auto& [k, v] : extra) out << k << " = " << v << "\n";
}

int cmd_synth(const Options& opt) {
    SceneSpec spec;
    if (!opt.scene_config.empty()) {
        spec = read_scene_spec(opt.scene_config);
    } else {
        spec.rows = opt.rows;
        spec.cols = opt.cols;
        if (opt.terrain == "bowl") spec.terrain = TerrainKind::Bowl;
        else if (opt.terrain == "ridged") spec.terrain = TerrainKind::Ridged;
        else spec.terrain = TerrainKind::Fractal;
        spec.observe_fraction = opt.observe_fraction;
        spec.pattern = opt.pattern == "swath" ? ObservationPattern::Swath
                                              : ObservationPattern::Random;
        spec.flood_quantile = opt.flood_quantile;
        spec.seed = opt.seed;
    }
    // Default planted emission model: one well-separated Gaussian per class.
    if (spec.planted_params.class_models[0].size() == 0) {
        for (int c = 0; c < 2; ++c) {
            GaussianComponent g;
            g.mean = Eigen::VectorXd::Constant(2, c ? 2.0 : 0.0);
            g.cov = Eigen::MatrixXd::Identity(2, 2);
            g.finalize();
            ClassMixture mix;
            mix.components.push_back(std::move(g));
            mix.weights = Eigen::VectorXd::Ones(1);
            spec.planted_params.class_models[c] = std::move(mix);
        }
        spec.planted_params.rho = opt.rho0;
        spec.planted_params.pi = opt.pi0;
    }
    Scene scene = generate_scene(spec);

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    write_ascii_grid(scene.stack.elevation, (dir / "elevation.asc").string());
    for (int j = 0; j < scene.stack.band_count; ++j)
        write_ascii_grid(scene.stack.features[j],
                         (dir / ("band_" + std::to_string(j) + ".asc")).string());
    write_class_grid(*scene.stack.truth, (dir / "truth.asc").string());
    write_training_csv(scene.train, (dir / "train.csv").string());
    write_scene_spec(spec, (dir / "scene.cfg").string());
    std::cout << "scene written to " << opt.out_dir << " (" << spec.rows << "x" << spec.cols
              << ", |O|=" << scene.stack.observed_count() << ")\n";
    return 0;
}

int cmd_build_tree(const Options& opt) {
    RasterGrid elev = read_ascii_grid(opt.elevation);
    SplitTree tree = build_split_tree(elev);
    auto violations = validate_tree(tree);
    for (const auto& v : violations) std::cerr << "violation: " << v << "\n";
    fs::create_directories(opt.out_dir);
    std::ofstream out(fs::path(opt.out_dir) / "tree.txt");
    dump_tree(tree, out);
    std::cout << "tree: " << tree.node_count << " nodes, root " << tree.root << ", "
              << (violations.empty() ? "valid" : "INVALID") << "\n";
    return violations.empty() ? 0 : 1;
}

int cmd_train(Options opt) {
    reconcile_method(opt);
    RasterStack stack = load_stack(opt);
    TrainingSet train = read_training_csv(opt.train_csv, stack.band_count);
    SplitTree tree = build_split_tree(stack.elevation);
    EmTrace trace;
    ModelParams params = train_structure(opt, tree, stack, train, trace);
    fs::create_directories(opt.out_dir);
    write_model(params, (fs::path(opt.out_dir) / "model.txt").string());
    trace.write_csv((fs::path(opt.out_dir) / "em_trace.csv").string());
    std::cout << "trained in " << trace.rows.size() << " iterations (converged="
              << (trace.converged ? "yes" : "no") << "), rho=" << params.rho
              << ", pi=" << params.pi << "\n";
    return 0;
}

int cmd_infer(const Options& opt) {
    RasterStack stack = load_stack(opt);
    ModelParams params = read_model(opt.model_path);
    SplitTree tree = build_split_tree(stack.elevation);
    MapResult map = max_sum_infer(tree, stack, params, opt.threads);
    fs::create_directories(opt.out_dir);
    write_class_grid(map.to_grid(stack.rows, stack.cols),
                     (fs::path(opt.out_dir) / "classes.asc").string());
    std::cout << "map_log_score = " << map.map_log_score << "\n";
    return 0;
}

int cmd_run(Options opt) {
    reconcile_method(opt);
    const auto t0 = std::chrono::steady_clock::now();
    RasterStack stack = load_stack(opt);
    TrainingSet train = read_training_csv(opt.train_csv, stack.band_count);

    auto t_tree = std::chrono::steady_clock::now();
    SplitTree tree = build_split_tree(stack.elevation);
    const double tree_s = seconds_since(t_tree);

    auto t_learn = std::chrono::steady_clock::now();
    EmTrace trace;
    ModelParams params = train_structure(opt, tree, stack, train, trace);
    const double learn_s = seconds_since(t_learn);

    auto t_infer = std::chrono::steady_clock::now();
    MapResult map = max_sum_infer(tree, stack, params, opt.threads);
    const double infer_s = seconds_since(t_infer);

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    write_class_grid(map.to_grid(stack.rows, stack.cols), (dir / "classes.asc").string());
    trace.write_csv((dir / "em_trace.csv").string());
    write_model(params, (dir / "model.txt").string());

    std::string avg_f = "n/a";
    if (stack.truth) {
        MetricsReport rep = score(map.to_grid(stack.rows, stack.cols), *stack.truth);
        std::ofstream mout(dir / "metrics.txt");
        mout << rep.table();
        std::ofstream mcsv(dir / "metrics.csv");
        mcsv << rep.csv();
        avg_f = std::to_string(rep.average_f);
        std::cout << rep.table();
    }
    write_manifest(opt, dir / "manifest.txt",
                   {{"cells", std::to_string(stack.cell_count())},
                    {"observed", std::to_string(stack.observed_count())},
                    {"iterations", std::to_string(trace.rows.size())},
                    {"tree_seconds", std::to_string(tree_s)},
                    {"learn_seconds", std::to_string(learn_s)},
                    {"infer_seconds", std::to_string(infer_s)},
                    {"total_seconds", std::to_string(seconds_since(t0))},
                    {"avg_f", avg_f}});
    return 0;
}

int cmd_baseline(const Options& opt) {
    RasterStack stack = load_stack(opt);
    TrainingSet train = read_training_csv(opt.train_csv, stack.band_count);
    std::vector<std::uint8_t> classes;
    if (opt.method == "em-iid") {
        IidParams params = em_iid_fit(stack, train, opt.max_iter, opt.tol, opt.seed);
        classes = em_iid_predict(params, stack);
    } else if (opt.method == "lp-mlc") {
        SplitTree tree = build_split_tree(stack.elevation);
        classes = lp_structure(stack, tree, train);
    } else {
        throw std::runtime_error("baseline method must be em-iid or lp-mlc");
    }
    RasterGrid grid = RasterGrid::filled(stack.rows, stack.cols, 0.0);
    for (std::size_t n = 0; n < classes.size(); ++n) grid.values[n] = classes[n];
    fs::create_directories(opt.out_dir);
    write_class_grid(grid, (fs::path(opt.out_dir) / "classes.asc").string());
    if (stack.truth) std::cout << score(grid, *stack.truth).table();
    return 0;
}

int cmd_eval(const Options& opt) {
    RasterGrid pred = read_ascii_grid(opt.pred);
    RasterGrid truth = read_ascii_grid(opt.truth);
    MetricsReport rep = score(pred, truth);
    std::cout << rep.table();
    fs::create_directories(opt.out_dir);
    std::ofstream mcsv(fs::path(opt.out_dir) / "metrics.csv");
    mcsv << rep.csv();
    return 0;
}

// Stage timings over increasing region sizes on fractal terrain.
int cmd_bench(const Options& opt) {
    fs::create_directories(opt.out_dir);
    std::ofstream csv(fs::path(opt.out_dir) / "bench.csv");
    csv << "cells,tree_seconds,learn_seconds,infer_seconds,total_seconds\n";
    std::cout << "cells tree_s learn_s infer_s total_s\n";
    for (std::int64_t cells : opt.bench_sizes) {
        const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cells))));
        SceneSpec spec;
        spec.rows = side;
        spec.cols = side;
        spec.terrain = TerrainKind::Fractal;
        spec.observe_fraction = opt.observe_fraction;
        spec.seed = opt.seed;
        spec.flood_quantile = 0.4;
        for (int c = 0; c < 2; ++c) {
            GaussianComponent g;
            g.mean = Eigen::VectorXd::Constant(1, c ? 2.0 : 0.0);
            g.cov = Eigen::MatrixXd::Identity(1, 1);
            g.finalize();
            ClassMixture mix;
            mix.components.push_back(std::move(g));
            mix.weights = Eigen::VectorXd::Ones(1);
            spec.planted_params.class_models[c] = std::move(mix);
        }
        Scene scene = generate_scene(spec);

        auto t_tree = std::chrono::steady_clock::now();
        SplitTree tree = build_split_tree(scene.stack.elevation);
        const double tree_s = seconds_since(t_tree);

        auto t_learn = std::chrono::steady_clock::now();
        ModelParams init = initialize(scene.train, 1, 1, opt.pi0, opt.rho0, opt.seed);
        EmOptions em_opts;
        em_opts.max_iterations = opt.max_iter;
        em_opts.tol = opt.tol;
        em_opts.threads = opt.threads;
        auto [params, trace] = run_em(tree, scene.stack, std::move(init), em_opts);
        const double learn_s = seconds_since(t_learn);

        auto t_infer = std::chrono::steady_clock::now();
        MapResult map = max_sum_infer(tree, scene.stack, params, opt.threads);
        const double infer_s = seconds_since(t_infer);
        (void)map;

        const double total = tree_s + learn_s + infer_s;
        csv << static_cast<std::int64_t>(side) * side << ',' << tree_s << ',' << learn_s << ','
            << infer_s << ',' << total << '\n';
        std::cout << static_cast<std::int64_t>(side) * side << ' ' << tree_s << ' ' << learn_s
                  << ' ' << infer_s << ' ' << total << std::endl;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hidden-Markov-tree raster classification on split-tree terrain structure"};
    app.require_subcommand(1);
    Options opt;

    app.set_config("--config")->configurable(false);
    app.add_option("--elevation", opt.elevation, "Elevation grid (ESRI ASCII)");
    app.add_option("--features", opt.features, "Feature band grids (repeatable)");
    app.add_option("--mask", opt.mask, "Optional observation mask grid (0 forces unobserved)");
    app.add_option("--train", opt.train_csv, "Training CSV (m feature columns + binary label)");
    app.add_option("--truth", opt.truth, "Ground-truth class grid");
    app.add_option("--model", opt.model_path, "Model parameter file");
    app.add_option("--pred", opt.pred, "Predicted class grid");
    app.add_option("--out-dir", opt.out_dir, "Output directory");
    app.add_option("--method", opt.method,
                   "structure-single | structure-multi | em-iid | lp-mlc");
    app.add_option("--k0", opt.k0, "Mixture components, class 0");
    app.add_option("--k1", opt.k1, "Mixture components, class 1");
    app.add_option("--pi0", opt.pi0, "Initial leaf prior");
    app.add_option("--rho0", opt.rho0, "Initial transition probability");
    app.add_option("--max-iter", opt.max_iter, "EM iteration cap");
    app.add_option("--tol", opt.tol, "EM convergence tolerance (max parameter delta)");
    app.add_option("--seed", opt.seed, "RNG seed");
    app.add_option("--threads", opt.threads, "Worker threads (0 = hardware)");
    app.add_option("--scene-config", opt.scene_config, "Scene spec file (key=value)");
    app.add_option("--rows", opt.rows, "Scene rows");
    app.add_option("--cols", opt.cols, "Scene cols");
    app.add_option("--terrain", opt.terrain, "bowl | ridged | fractal");
    app.add_option("--observe-fraction", opt.observe_fraction, "Observed cell fraction");
    app.add_option("--pattern", opt.pattern, "random | swath");
    app.add_option("--flood-quantile", opt.flood_quantile, "Flood level as elevation quantile");
    app.add_option("--bench-sizes", opt.bench_sizes, "Cell counts for the bench sweep");

    auto* synth = app.add_subcommand("synth", "Generate a synthetic scene with planted truth");
    auto* build_tree = app.add_subcommand("build-tree", "Construct and validate the split tree");
    auto* train = app.add_subcommand("train", "Learn model parameters with EM");
    auto* infer = app.add_subcommand("infer", "MAP class inference with a trained model");
    auto* run = app.add_subcommand("run", "End-to-end: tree, EM, MAP, metrics");
    auto* baseline = app.add_subcommand("baseline", "Run a baseline method (em-iid, lp-mlc)");
    auto* eval = app.add_subcommand("eval", "Score a prediction against ground truth");
    auto* bench = app.add_subcommand("bench", "Stage timings across region sizes");
    for (auto* sub : app.get_subcommands(nullptr)) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth->parsed()) return cmd_synth(opt);
        if (build_tree->parsed()) return cmd_build_tree(opt);
        if (train->parsed()) return cmd_train(opt);
        if (infer->parsed()) return cmd_infer(opt);
        if (run->parsed()) return cmd_run(opt);
        if (baseline->parsed()) return cmd_baseline(opt);
        if (eval->parsed()) return cmd_eval(opt);
        if (bench->parsed()) return cmd_bench(opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
