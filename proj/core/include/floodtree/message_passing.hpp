#pragma once

#include "floodtree/model.hpp"
#include "floodtree/raster.hpp"
#include "floodtree/split_tree.hpp"

#include <vector>

namespace floodtree {

// Per-cell log emission densities under both classes; zero (log 1) at
// unobserved cells so the same factor arrays serve every pass.
struct EmissionTable {
    std::vector<double> log_density;   // 2 per cell: [2n]=class0, [2n+1]=class1

    double ld(std::int64_t n, int y) const { return log_density[2 * n + y]; }
};

EmissionTable compute_emissions(const RasterStack& stack, const ModelParams& params,
                                int threads = 0);

// Messages are stored in the linear domain, max-normalized per node (the
// normalization constants cancel in every normalized posterior).
struct MessageTable {
    std::vector<double> fwd_in;    // f^i, 2 per node
    std::vector<double> fwd_out;   // f^o
    std::vector<double> bwd_in;    // g^i
    std::vector<double> bwd_out;   // g^o
    // Log of the product of all normalization constants dropped during the
    // forward pass; restores the exact evidence.
    double fwd_log_scale = 0.0;
};

struct PosteriorTable {
    std::vector<double> marginal;  // P(y_n | X_o), 2 per node
    // Joint with the parent product v: 4 per non-leaf node, index 2*y + v.
    // Entries of leaf nodes are zero-filled.
    std::vector<double> pair;
    // Mixture responsibilities at observed cells, per class (size N*K_c;
    // unobserved rows zero).
    std::array<std::vector<double>, 2> gamma;

    double marg(std::int64_t n, int y) const { return marginal[2 * n + y]; }
    double pr(std::int64_t n, int y, int v) const { return pair[4 * n + 2 * y + v]; }
};

void forward_pass(const SplitTree& tree, const RasterStack& stack, const ModelParams& params,
                  const EmissionTable& emis, MessageTable& msgs);
void backward_pass(const SplitTree& tree, const RasterStack& stack, const ModelParams& params,
                   const EmissionTable& emis, MessageTable& msgs);
PosteriorTable posteriors(const SplitTree& tree, const RasterStack& stack,
                          const ModelParams& params, const EmissionTable& emis,
                          const MessageTable& msgs);

// Full E-step: emissions, both passes, posteriors.
PosteriorTable compute_posteriors(const SplitTree& tree, const RasterStack& stack,
                                  const ModelParams& params, int threads = 0);

// Observed-data log-likelihood log P(X_o), exact: root mass from the forward
// pass times the accumulated normalization constants.
double evidence_log_likelihood(const SplitTree& tree, const MessageTable& msgs);
double incomplete_log_likelihood(const SplitTree& tree, const RasterStack& stack,
                                 const ModelParams& params, int threads = 0);

}  // namespace floodtree
