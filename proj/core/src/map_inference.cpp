#include "floodtree/map_inference.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace floodtree {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

RasterGrid MapResult::to_grid(int rows, int cols) const {
    RasterGrid g = RasterGrid::filled(rows, cols, 0.0);
    for (std::size_t n = 0; n < classes.size(); ++n) g.values[n] = classes[n];
    return g;
}

double log_joint(const SplitTree& tree, const RasterStack& stack, const ModelParams& params,
                 const std::vector<std::uint8_t>& classes) {
    const double log_rho = std::log(params.rho);
    const double log_1mrho = std::log1p(-params.rho);
    const double log_pi = std::log(params.pi);
    const double log_1mpi = std::log1p(-params.pi);
    double ll = 0.0;
    for (std::int64_t n = 0; n < tree.node_count; ++n) {
        const int y = classes[n];
        if (stack.observed[n])
            ll += params.class_models[y].log_density(stack.feature_vector(n));
        if (tree.is_leaf(n)) {
            ll += y ? log_pi : log_1mpi;
        } else {
            int v = 1;
            for (auto k : tree.parents(n)) v &= classes[k];
            if (v == 1) {
                ll += y ? log_rho : log_1mrho;
            } else if (y == 1) {
                return kNegInf;   // P(y=1 | parent product 0) = 0
            }
        }
    }
    return ll;
}

MapResult max_sum_infer(const SplitTree& tree, const RasterStack& stack,
                        const ModelParams& params, int threads) {
    const std::int64_t n_cells = tree.node_count;
    const EmissionTable emis = compute_emissions(stack, params, threads);
    const double log_rho = std::log(params.rho);
    const double log_1mrho = std::log1p(-params.rho);
    const double log_pi = std::log(params.pi);
    const double log_1mpi = std::log1p(-params.pi);

    // up[2n+y]: best log score of the subtree below n (inclusive) given y_n=y.
    std::vector<double> up(2 * n_cells, 0.0);
    // Chosen parent-product value per (node, y); traceback data for v=0:
    // each parent takes its own argmax, except flip_parent is forced to 0
    // when every parent's individual argmax is 1.
    std::vector<std::uint8_t> best_v(2 * n_cells, 0);
    std::vector<std::int32_t> flip_parent(n_cells, -1);

    for (std::int32_t n : tree.ascending_order) {
        double e0 = 0.0, e1 = 0.0;
        if (stack.observed[n]) {
            e0 = emis.ld(n, 0);
            e1 = emis.ld(n, 1);
        }
        if (tree.is_leaf(n)) {
            up[2 * n] = log_1mpi + e0;
            up[2 * n + 1] = log_pi + e1;
            continue;
        }
        // T(1): all parents 1. T(0): each parent free, at least one 0 --
        // if every individual argmax is 1, flip the parent with minimal loss.
        double t1 = 0.0, t0 = 0.0;
        double min_loss = std::numeric_limits<double>::infinity();
        std::int32_t min_loss_parent = -1;
        bool any_zero = false;
        for (auto k : tree.parents(n)) {
            const double u0 = up[2 * k], u1 = up[2 * k + 1];
            t1 += u1;
            if (u0 >= u1) {   // tie toward class 0
                t0 += u0;
                any_zero = true;
            } else {
                t0 += u1;
                const double loss = u1 - u0;
                if (loss < min_loss) {
                    min_loss = loss;
                    min_loss_parent = k;
                }
            }
        }
        if (!any_zero) {
            t0 -= min_loss;
            flip_parent[n] = min_loss_parent;
        }
        // y=0: P(0|0)=1, P(0|1)=1-rho ; y=1: only v=1 is feasible.
        const double s00 = t0, s01 = log_1mrho + t1;
        if (s00 >= s01) {
            up[2 * n] = e0 + s00;
            best_v[2 * n] = 0;
        } else {
            up[2 * n] = e0 + s01;
            best_v[2 * n] = 1;
        }
        up[2 * n + 1] = e1 + log_rho + t1;
        best_v[2 * n + 1] = 1;
    }

    MapResult result;
    result.classes.assign(n_cells, 0);
    const std::int32_t root = tree.root;
    const int y_root = up[2 * root] >= up[2 * root + 1] ? 0 : 1;
    result.classes[root] = static_cast<std::uint8_t>(y_root);
    result.map_log_score = up[2 * root + y_root];

    // Traceback in reverse ascending order: every node's child (and thus its
    // own label decision) is settled before the node is visited.
    for (auto it = tree.ascending_order.rbegin(); it != tree.ascending_order.rend(); ++it) {
        const std::int32_t n = *it;
        if (tree.is_leaf(n)) continue;
        const int y = result.classes[n];
        if (best_v[2 * n + y] == 1) {
            for (auto k : tree.parents(n)) result.classes[k] = 1;
        } else {
            for (auto k : tree.parents(n)) {
                int yk = up[2 * k] >= up[2 * k + 1] ? 0 : 1;
                if (k == flip_parent[n]) yk = 0;
                result.classes[k] = static_cast<std::uint8_t>(yk);
            }
        }
    }
    return result;
}

MapResult marginal_decode(const SplitTree& tree, const RasterStack& stack,
                          const ModelParams& params, int threads) {
    PosteriorTable post = compute_posteriors(tree, stack, params, threads);
    MapResult result;
    result.classes.assign(tree.node_count, 0);
    for (std::int64_t n = 0; n < tree.node_count; ++n)
        result.classes[n] = post.marg(n, 1) > post.marg(n, 0) ? 1 : 0;
    result.map_log_score = log_joint(tree, stack, params, result.classes);
    return result;
}

}  // namespace floodtree
