#include "floodtree/message_passing.hpp"

#include "floodtree/parallel.hpp"

#include <cmath>
#include <stdexcept>

namespace floodtree {

EmissionTable compute_emissions(const RasterStack& stack, const ModelParams& params,
                                int threads) {
    const auto n_cells = static_cast<std::int64_t>(stack.cell_count());
    EmissionTable emis;
    emis.log_density.assign(2 * n_cells, 0.0);
    parallel_for(0, n_cells, threads, [&](std::int64_t n) {
        if (!stack.observed[n]) return;
        Eigen::VectorXd x = stack.feature_vector(n);
        emis.log_density[2 * n] = params.class_models[0].log_density(x);
        emis.log_density[2 * n + 1] = params.class_models[1].log_density(x);
    });
    return emis;
}

namespace {

// Rescales so max(a, b) == 1 and returns the log of the dropped factor.
inline double max_normalize(double& a, double& b) {
    double m = a > b ? a : b;
    if (m > 0) {
        a /= m;
        b /= m;
        return std::log(m);
    }
    return 0.0;
}

// Multiply an incoming message by the emission factor (observed cells only),
// max-normalized so linear-domain values stay in [0,1]. Returns the log of
// the total dropped factor.
inline double apply_emission(double in0, double in1, bool observed, double ld0, double ld1,
                             double& out0, double& out1) {
    if (!observed) {
        out0 = in0;
        out1 = in1;
        return 0.0;
    }
    double m = ld0 > ld1 ? ld0 : ld1;
    out0 = in0 * std::exp(ld0 - m);
    out1 = in1 * std::exp(ld1 - m);
    return m + max_normalize(out0, out1);
}

// Mass of parent/sibling configurations by product value, collapsed exactly:
// prod1 = prod_k f_k(1); prod0 = prod_k (f_k(0)+f_k(1)) - prod1.
struct ProductMass {
    double at_one;
    double at_zero;
};

template <typename Range>
ProductMass product_mass(const Range& nodes, const std::vector<double>& msg) {
    double p1 = 1.0, all = 1.0;
    for (auto k : nodes) {
        p1 *= msg[2 * k + 1];
        all *= msg[2 * k] + msg[2 * k + 1];
    }
    double p0 = all - p1;
    if (p0 < 0) p0 = 0;   // guards rounding when every f_k(0) == 0
    return {p1, p0};
}

}  // namespace

void forward_pass(const SplitTree& tree, const RasterStack& stack, const ModelParams& params,
                  const EmissionTable& emis, MessageTable& msgs) {
    const std::int64_t n_cells = tree.node_count;
    msgs.fwd_in.assign(2 * n_cells, 0.0);
    msgs.fwd_out.assign(2 * n_cells, 0.0);
    msgs.fwd_log_scale = 0.0;
    const double rho = params.rho, pi = params.pi;

    for (std::int32_t n : tree.ascending_order) {
        double f0, f1;
        if (tree.is_leaf(n)) {
            f0 = 1.0 - pi;
            f1 = pi;
        } else {
            ProductMass m = product_mass(tree.parents(n), msgs.fwd_out);
            // P(y|v): v=0 -> (1,0); v=1 -> (1-rho, rho)
            f0 = m.at_zero + (1.0 - rho) * m.at_one;
            f1 = rho * m.at_one;
        }
        msgs.fwd_log_scale += max_normalize(f0, f1);
        msgs.fwd_in[2 * n] = f0;
        msgs.fwd_in[2 * n + 1] = f1;
        msgs.fwd_log_scale +=
            apply_emission(f0, f1, stack.observed[n], emis.ld(n, 0), emis.ld(n, 1),
                           msgs.fwd_out[2 * n], msgs.fwd_out[2 * n + 1]);
    }
}

void backward_pass(const SplitTree& tree, const RasterStack& stack, const ModelParams& params,
                   const EmissionTable& emis, MessageTable& msgs) {
    const std::int64_t n_cells = tree.node_count;
    msgs.bwd_in.assign(2 * n_cells, 0.0);
    msgs.bwd_out.assign(2 * n_cells, 0.0);
    const double rho = params.rho;

    // Reverse ascending order visits every child before its parents.
    for (auto it = tree.ascending_order.rbegin(); it != tree.ascending_order.rend(); ++it) {
        const std::int32_t n = *it;
        double g0, g1;
        if (tree.child[n] < 0) {
            g0 = g1 = 1.0;
        } else {
            const std::int32_t c = tree.child[n];
            const double gc0 = msgs.bwd_out[2 * c], gc1 = msgs.bwd_out[2 * c + 1];
            // Sibling mass by product value; v = y_n * prod(siblings).
            double s1 = 1.0, sall = 1.0;
            for (auto k : tree.parents(c)) {
                if (k == n) continue;
                s1 *= msgs.fwd_out[2 * k + 1];
                sall *= msgs.fwd_out[2 * k] + msgs.fwd_out[2 * k + 1];
            }
            double s0 = sall - s1;
            if (s0 < 0) s0 = 0;
            // y_n=1: P(y_c|v=1)*s1 + P(y_c|v=0)*s0 ; y_n=0: P(y_c|v=0)*sall
            g1 = gc0 * ((1.0 - rho) * s1 + 1.0 * s0) + gc1 * (rho * s1 + 0.0);
            g0 = gc0 * 1.0 * sall;
        }
        max_normalize(g0, g1);
        msgs.bwd_in[2 * n] = g0;
        msgs.bwd_in[2 * n + 1] = g1;
        apply_emission(g0, g1, stack.observed[n], emis.ld(n, 0), emis.ld(n, 1),
                       msgs.bwd_out[2 * n], msgs.bwd_out[2 * n + 1]);
    }
}

PosteriorTable posteriors(const SplitTree& tree, const RasterStack& stack,
                          const ModelParams& params, const EmissionTable& emis,
                          const MessageTable& msgs) {
    const std::int64_t n_cells = tree.node_count;
    PosteriorTable post;
    post.marginal.assign(2 * n_cells, 0.0);
    post.pair.assign(4 * n_cells, 0.0);
    const double rho = params.rho;

    for (std::int64_t n = 0; n < n_cells; ++n) {
        // Node marginal: f^i * g^i * emission-if-observed, then normalize.
        double p0, p1;
        apply_emission(msgs.fwd_in[2 * n] * msgs.bwd_in[2 * n],
                       msgs.fwd_in[2 * n + 1] * msgs.bwd_in[2 * n + 1], stack.observed[n],
                       emis.ld(n, 0), emis.ld(n, 1), p0, p1);
        double z = p0 + p1;
        if (!(z > 0))
            throw std::runtime_error("marginal normalizer underflow at node " + std::to_string(n));
        post.marginal[2 * n] = p0 / z;
        post.marginal[2 * n + 1] = p1 / z;

        if (tree.is_leaf(n)) continue;
        // Joint with parent product: M(v) * P(y|v) * g^o_n(y).
        ProductMass m = product_mass(tree.parents(n), msgs.fwd_out);
        const double go0 = msgs.bwd_out[2 * n], go1 = msgs.bwd_out[2 * n + 1];
        double q00 = m.at_zero * 1.0 * go0;           // y=0, v=0
        double q01 = m.at_one * (1.0 - rho) * go0;    // y=0, v=1
        double q10 = 0.0;                             // y=1, v=0 (structural zero)
        double q11 = m.at_one * rho * go1;            // y=1, v=1
        double zq = q00 + q01 + q10 + q11;
        if (!(zq > 0))
            throw std::runtime_error("pair normalizer underflow at node " + std::to_string(n));
        post.pair[4 * n + 0] = q00 / zq;
        post.pair[4 * n + 1] = q01 / zq;
        post.pair[4 * n + 2] = q10 / zq;
        post.pair[4 * n + 3] = q11 / zq;
    }

    for (int c = 0; c < 2; ++c) {
        const int k = params.class_models[c].size();
        post.gamma[c].assign(static_cast<std::size_t>(n_cells) * k, 0.0);
    }
    for (std::int64_t n = 0; n < n_cells; ++n) {
        if (!stack.observed[n]) continue;
        Eigen::VectorXd x = stack.feature_vector(n);
        for (int c = 0; c < 2; ++c) {
            Eigen::VectorXd g = params.class_models[c].responsibilities(x);
            const int k = params.class_models[c].size();
            for (int i = 0; i < k; ++i) post.gamma[c][n * k + i] = g[i];
        }
    }
    return post;
}

PosteriorTable compute_posteriors(const SplitTree& tree, const RasterStack& stack,
                                  const ModelParams& params, int threads) {
    EmissionTable emis = compute_emissions(stack, params, threads);
    MessageTable msgs;
    forward_pass(tree, stack, params, emis, msgs);
    backward_pass(tree, stack, params, emis, msgs);
    return posteriors(tree, stack, params, emis, msgs);
}

double evidence_log_likelihood(const SplitTree& tree, const MessageTable& msgs) {
    const std::int32_t r = tree.root;
    return msgs.fwd_log_scale + std::log(msgs.fwd_out[2 * r] + msgs.fwd_out[2 * r + 1]);
}

double incomplete_log_likelihood(const SplitTree& tree, const RasterStack& stack,
                                 const ModelParams& params, int threads) {
    EmissionTable emis = compute_emissions(stack, params, threads);
    MessageTable msgs;
    forward_pass(tree, stack, params, emis, msgs);
    return evidence_log_likelihood(tree, msgs);
}

}  // namespace floodtree
