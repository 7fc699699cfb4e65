#pragma once

#include "floodtree/model.hpp"
#include "floodtree/raster.hpp"
#include "floodtree/split_tree.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace floodtree {

enum class TerrainKind { Bowl, Ridged, Fractal };
enum class ObservationPattern { Random, Swath };
// Ground truth either by level-filling the terrain or by sampling classes
// from the planted transition/prior parameters along the tree.
enum class TruthMode { LevelFill, ModelSample };

struct SceneSpec {
    int rows = 64;
    int cols = 64;
    TerrainKind terrain = TerrainKind::Fractal;
    double roughness = 0.8;            // fractal midpoint-displacement decay
    double flood_level = 0.0;
    double flood_quantile = 0.5;       // used when >= 0; overrides flood_level
    TruthMode truth_mode = TruthMode::LevelFill;
    ModelParams planted_params;
    double observe_fraction = 0.1;
    ObservationPattern pattern = ObservationPattern::Random;
    int train_per_class = 1000;
    std::uint64_t seed = 1;
};

struct Scene {
    RasterStack stack;   // includes truth grid
    TrainingSet train;
    SplitTree tree;
};

RasterGrid make_terrain(const SceneSpec& spec);
Scene generate_scene(const SceneSpec& spec);

// key=value scene configuration (one pair per line, '#' comments).
SceneSpec read_scene_spec(const std::string& path);
void write_scene_spec(const SceneSpec& spec, const std::string& path);

// Exhaustive joint over all 2^N class assignments (N <= 12): the independent
// oracle for marginals, joints with the parent product, and MAP.
struct JointTable {
    int node_count = 0;
    std::vector<double> log_prob;   // indexed by assignment bits, bit n = y_n

    std::vector<double> marginals() const;                            // 2 per node
    std::vector<double> pair_marginals(const SplitTree& tree) const;  // 4 per node (2y+v)
    std::pair<std::vector<std::uint8_t>, double> map_assignment() const;
};

JointTable enumerate_joint(const SplitTree& tree, const RasterStack& stack,
                           const ModelParams& params);

// Small random instance (grid of 4-12 cells, random mask and valid params)
// for oracle-equivalence checks.
struct SmallInstance {
    RasterStack stack;
    SplitTree tree;
    ModelParams params;
};
SmallInstance random_small_instance(std::uint64_t seed, int max_mixture_size = 2);

}  // namespace floodtree
