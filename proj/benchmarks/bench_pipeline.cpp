// Microbenchmarks for the pipeline stages: split-tree construction, one EM
// iteration (E-step + M-step), and MAP inference, across grid sizes.
#include "floodtree/em.hpp"
#include "floodtree/map_inference.hpp"
#include "floodtree/message_passing.hpp"
#include "floodtree/split_tree.hpp"
#include "floodtree/synth.hpp"

#include <benchmark/benchmark.h>

#include <map>
#include <memory>

namespace {

using namespace floodtree;

SceneSpec bench_spec(std::int64_t side) {
    SceneSpec spec;
    spec.rows = static_cast<int>(side);
    spec.cols = static_cast<int>(side);
    spec.terrain = TerrainKind::Fractal;
    spec.flood_quantile = 0.4;
    spec.observe_fraction = 0.1;
    spec.seed = 9;
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
    return spec;
}

// One cached scene per size; regenerating terrain per iteration would
// dominate the measurement.
const Scene& cached_scene(std::int64_t side) {
    static std::map<std::int64_t, std::unique_ptr<Scene>> scenes;
    auto& slot = scenes[side];
    if (!slot) slot = std::make_unique<Scene>(generate_scene(bench_spec(side)));
    return *slot;
}

void BM_BuildTree(benchmark::State& state) {
    const Scene& scene = cached_scene(state.range(0));
    for (auto _ : state) {
        SplitTree tree = build_split_tree(scene.stack.elevation);
        benchmark::DoNotOptimize(tree.root);
    }
    state.SetItemsProcessed(state.iterations() * scene.tree.node_count);
}

void BM_EmIteration(benchmark::State& state) {
    const Scene& scene = cached_scene(state.range(0));
    ModelParams params = initialize(scene.train, 1, 1, 0.5, 0.999, 7);
    for (auto _ : state) {
        PosteriorTable post = compute_posteriors(scene.tree, scene.stack, params);
        ModelParams next = m_step(scene.tree, scene.stack, post, params);
        benchmark::DoNotOptimize(next.rho);
    }
    state.SetItemsProcessed(state.iterations() * scene.tree.node_count);
}

void BM_MapInfer(benchmark::State& state) {
    const Scene& scene = cached_scene(state.range(0));
    ModelParams params = initialize(scene.train, 1, 1, 0.5, 0.999, 7);
    for (auto _ : state) {
        MapResult map = max_sum_infer(scene.tree, scene.stack, params);
        benchmark::DoNotOptimize(map.map_log_score);
    }
    state.SetItemsProcessed(state.iterations() * scene.tree.node_count);
}

BENCHMARK(BM_BuildTree)->Arg(128)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EmIteration)->Arg(128)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MapInfer)->Arg(128)->Arg(256)->Arg(512)->Arg(1024)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
