#include "floodtree/split_tree.hpp"

#include <algorithm>
#include <numeric>
#include <ostream>
#include <stdexcept>

namespace floodtree {

std::vector<std::int32_t> SplitTree::siblings(std::int64_t n) const {
    std::vector<std::int32_t> out;
    if (child[n] < 0) return out;
    for (auto k : parents(child[n]))
        if (k != n) out.push_back(k);
    return out;
}

CellOrder sort_cells(const RasterGrid& elevation) {
    for (std::size_t n = 0; n < elevation.cell_count(); ++n)
        if (elevation.is_nodata(n))
            throw std::runtime_error("elevation grid contains nodata cells");
    CellOrder order(elevation.cell_count());
    std::iota(order.begin(), order.end(), 0);
    const auto& v = elevation.values;
    std::sort(order.begin(), order.end(), [&](std::int32_t a, std::int32_t b) {
        if (v[a] != v[b]) return v[a] < v[b];
        return a < b;
    });
    return order;
}

namespace {

// Union-find with path halving; each set tracks its most recently merged cell.
struct DisjointSets {
    std::vector<std::int32_t> parent;
    std::vector<std::int32_t> top;   // last-processed cell of the set

    explicit DisjointSets(std::int64_t n) : parent(n, -1), top(n, -1) {}

    std::int32_t find(std::int32_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void make(std::int32_t x) {
        parent[x] = x;
        top[x] = x;
    }
    bool contains(std::int32_t x) const { return parent[x] >= 0; }
    void absorb(std::int32_t root, std::int32_t into) {
        parent[root] = into;
    }
};

}  // namespace

SplitTree build_split_tree(const RasterGrid& elevation) {
    const std::int64_t n_cells = static_cast<std::int64_t>(elevation.cell_count());
    const int rows = elevation.rows, cols = elevation.cols;

    SplitTree tree;
    tree.node_count = n_cells;
    tree.ascending_order = sort_cells(elevation);
    tree.child.assign(n_cells, -1);

    DisjointSets sets(n_cells);
    // Edges collected as (child n, parent k); parents of each n are contiguous.
    std::vector<std::int32_t> edge_child, edge_parent;
    edge_child.reserve(n_cells);
    edge_parent.reserve(n_cells);

    std::int32_t neigh[4];
    std::int32_t comp_roots[4];
    for (std::int32_t n : tree.ascending_order) {
        const int r = n / cols, c = n % cols;
        int n_neigh = 0;
        if (r > 0) neigh[n_neigh++] = n - cols;
        if (r + 1 < rows) neigh[n_neigh++] = n + cols;
        if (c > 0) neigh[n_neigh++] = n - 1;
        if (c + 1 < cols) neigh[n_neigh++] = n + 1;

        int n_comp = 0;
        for (int i = 0; i < n_neigh; ++i) {
            if (!sets.contains(neigh[i])) continue;
            std::int32_t root = sets.find(neigh[i]);
            bool dup = false;
            for (int j = 0; j < n_comp; ++j) dup |= comp_roots[j] == root;
            if (!dup) comp_roots[n_comp++] = root;
        }
        sets.make(n);
        for (int j = 0; j < n_comp; ++j) {
            std::int32_t k = sets.top[comp_roots[j]];
            edge_child.push_back(n);
            edge_parent.push_back(k);
            tree.child[k] = n;
            sets.absorb(comp_roots[j], n);
        }
        // n merged zero components => leaf (local minimum of merged structure)
    }

    // A rectangular 4-connected grid always merges into one component, but if
    // disjoint sets remain (degenerate inputs), stitch them under the highest
    // processed cell so exactly one root exists.
    std::int32_t last = tree.ascending_order.back();
    std::int32_t final_root = sets.find(last);
    for (std::int32_t n = 0; n < n_cells; ++n) {
        std::int32_t root = sets.find(n);
        if (root != final_root && tree.child[sets.top[root]] < 0 && sets.top[root] != last) {
            edge_child.push_back(last);
            edge_parent.push_back(sets.top[root]);
            tree.child[sets.top[root]] = last;
            sets.absorb(root, final_root);
        }
    }
    tree.root = sets.top[final_root];

    // Build CSR from the contiguous edge list.
    tree.parent_offset.assign(n_cells + 1, 0);
    for (auto ch : edge_child) ++tree.parent_offset[ch + 1];
    for (std::int64_t i = 0; i < n_cells; ++i)
        tree.parent_offset[i + 1] += tree.parent_offset[i];
    tree.parent_data.resize(edge_child.size());
    std::vector<std::int32_t> cursor(tree.parent_offset.begin(), tree.parent_offset.end() - 1);
    for (std::size_t e = 0; e < edge_child.size(); ++e)
        tree.parent_data[cursor[edge_child[e]]++] = edge_parent[e];
    return tree;
}

std::vector<std::string> validate_tree(const SplitTree& tree) {
    std::vector<std::string> violations;
    const std::int64_t n_cells = tree.node_count;

    std::int64_t n_roots = 0;
    for (std::int64_t n = 0; n < n_cells; ++n)
        if (tree.child[n] < 0) ++n_roots;
    if (n_roots != 1)
        violations.push_back("expected exactly one root, found " + std::to_string(n_roots));
    if (tree.root < 0 || tree.root >= n_cells || tree.child[tree.root] >= 0)
        violations.push_back("root index does not name a childless node");

    // Reciprocity both ways. Each node has one child slot by construction, so
    // "multiple children" manifests as a node appearing in several parent lists.
    std::vector<std::int32_t> child_via_parents(n_cells, -1);
    for (std::int64_t n = 0; n < n_cells; ++n) {
        for (auto k : tree.parents(n)) {
            if (k < 0 || k >= n_cells) {
                violations.push_back("node " + std::to_string(n) + " has out-of-range parent");
                continue;
            }
            if (child_via_parents[k] >= 0)
                violations.push_back("multiple children: node " + std::to_string(k));
            child_via_parents[k] = static_cast<std::int32_t>(n);
            if (tree.child[k] != n)
                violations.push_back("reciprocity: node " + std::to_string(k) +
                                     " listed as parent of " + std::to_string(n) +
                                     " but child(" + std::to_string(k) + ") differs");
        }
    }
    for (std::int64_t n = 0; n < n_cells; ++n)
        if (tree.child[n] >= 0 && child_via_parents[n] != tree.child[n])
            violations.push_back("node " + std::to_string(n) +
                                 " names a child that does not list it as parent");

    // Acyclicity + connectivity: every node must reach the root via child
    // links in at most N steps.
    for (std::int64_t n = 0; n < n_cells; ++n) {
        std::int64_t steps = 0;
        std::int32_t cur = static_cast<std::int32_t>(n);
        while (tree.child[cur] >= 0 && steps <= n_cells) {
            cur = tree.child[cur];
            ++steps;
        }
        if (steps > n_cells) {
            violations.push_back("cycle detected from node " + std::to_string(n));
            break;
        }
        if (cur != tree.root) {
            violations.push_back("node " + std::to_string(n) + " does not reach the root");
            break;
        }
    }

    // Sibling definition check on a sample of nodes (full scan is O(N) anyway).
    for (std::int64_t n = 0; n < n_cells; ++n) {
        if (tree.child[n] < 0) continue;
        bool found = false;
        for (auto k : tree.parents(tree.child[n])) found |= k == n;
        if (!found) {
            violations.push_back("sibling consistency: node " + std::to_string(n) +
                                 " missing from parents of its child");
            break;
        }
    }
    return violations;
}

void dump_tree(const SplitTree& tree, std::ostream& out) {
    for (std::int64_t n = 0; n < tree.node_count; ++n) {
        out << n << ' ' << tree.child[n] << ' ' << tree.parent_count(n);
        for (auto k : tree.parents(n)) out << ' ' << k;
        out << '\n';
    }
}

}  // namespace floodtree
