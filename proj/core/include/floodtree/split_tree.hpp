#pragma once

#include "floodtree/raster.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace floodtree {

// Cell indices sorted ascending by (elevation, index).
using CellOrder = std::vector<std::int32_t>;

// Split tree over the elevation grid. Edges point child -> parents, where
// parents are downstream (lower) merge representatives: a cell can be flooded
// only if the product of its parents' classes is 1. Leaves are local minima
// (no parents); the root is the highest-processed merge node.
struct SplitTree {
    std::int64_t node_count = 0;
    std::vector<std::int32_t> child;          // unique child per node; -1 at root
    std::vector<std::int32_t> parent_offset;  // CSR offsets, size node_count+1
    std::vector<std::int32_t> parent_data;
    CellOrder ascending_order;                // parents of n always precede n
    std::int32_t root = -1;

    std::span<const std::int32_t> parents(std::int64_t n) const {
        return {parent_data.data() + parent_offset[n],
                parent_data.data() + parent_offset[n + 1]};
    }
    bool is_leaf(std::int64_t n) const { return parent_offset[n] == parent_offset[n + 1]; }
    int parent_count(std::int64_t n) const { return parent_offset[n + 1] - parent_offset[n]; }
    // Other parents of child(n); empty when n is root.
    std::vector<std::int32_t> siblings(std::int64_t n) const;
};

CellOrder sort_cells(const RasterGrid& elevation);
SplitTree build_split_tree(const RasterGrid& elevation);

// Structural checks: acyclicity, single root, child/parent reciprocity,
// sibling consistency. Empty result means the tree is well formed.
std::vector<std::string> validate_tree(const SplitTree& tree);

// One line per node: "n child parent_count parents...".
void dump_tree(const SplitTree& tree, std::ostream& out);

}  // namespace floodtree
