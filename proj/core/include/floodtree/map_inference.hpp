#pragma once

#include "floodtree/message_passing.hpp"
#include "floodtree/model.hpp"
#include "floodtree/raster.hpp"
#include "floodtree/split_tree.hpp"

#include <vector>

namespace floodtree {

struct MapResult {
    std::vector<std::uint8_t> classes;   // per cell, {0,1}
    double map_log_score = 0.0;          // log joint at the returned assignment

    RasterGrid to_grid(int rows, int cols) const;
};

// Joint MAP assignment by max-sum dynamic programming on the split tree.
// Ties are broken toward class 0.
MapResult max_sum_infer(const SplitTree& tree, const RasterStack& stack,
                        const ModelParams& params, int threads = 0);

// Per-cell argmax of posterior marginals (debug decoding, not the primary output).
MapResult marginal_decode(const SplitTree& tree, const RasterStack& stack,
                          const ModelParams& params, int threads = 0);

// Log joint (observed-cell emissions plus transition/prior factors) at a
// full class assignment; -inf when the assignment violates a structural zero.
double log_joint(const SplitTree& tree, const RasterStack& stack, const ModelParams& params,
                 const std::vector<std::uint8_t>& classes);

}  // namespace floodtree
