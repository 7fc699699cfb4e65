#include "floodtree/em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace floodtree {

void ModelParams::clamp() {
    rho = std::clamp(rho, kRhoFloor, 1.0 - kRhoFloor);
    pi = std::clamp(pi, kPiFloor, 1.0 - kPiFloor);
}

void write_model(const ModelParams& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", params.rho);
    out << "rho " << buf << "\n";
    std::snprintf(buf, sizeof buf, "%.17g", params.pi);
    out << "pi " << buf << "\n";
    out << "generation " << params.generation << "\n";
    for (int c = 0; c < 2; ++c) {
        out << "class " << c << "\n";
        write_mixture(params.class_models[c], out);
    }
}

ModelParams read_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    ModelParams p;
    std::string tag;
    if (!(in >> tag >> p.rho) || tag != "rho") throw std::runtime_error("bad model file: expected 'rho'");
    if (!(in >> tag >> p.pi) || tag != "pi") throw std::runtime_error("bad model file: expected 'pi'");
    if (!(in >> tag >> p.generation) || tag != "generation")
        throw std::runtime_error("bad model file: expected 'generation'");
    for (int c = 0; c < 2; ++c) {
        int idx;
        if (!(in >> tag >> idx) || tag != "class" || idx != c)
            throw std::runtime_error("bad model file: expected 'class' block");
        p.class_models[c] = read_mixture(in);
    }
    return p;
}

ModelParams initialize(const TrainingSet& train, int k0, int k1, double pi0, double rho0,
                       std::uint64_t seed) {
    if (k0 < 1 || k1 < 1) throw std::runtime_error("mixture sizes must be >= 1");
    ModelParams p;
    p.rho = rho0;
    p.pi = pi0;
    p.clamp();
    p.class_models[0] = fit_initial_mixture(train, 0, k0, seed);
    p.class_models[1] = fit_initial_mixture(train, 1, k1, seed + 1);
    p.generation = 0;
    return p;
}

namespace {

void update_class_mixtures(const RasterStack& stack, const PosteriorTable& post,
                           const ModelParams& old, ModelParams& next, MStepReport* report) {
    const auto n_cells = static_cast<std::int64_t>(stack.cell_count());
    for (int c = 0; c < 2; ++c) {
        const int k = old.class_models[c].size();
        const int m = old.class_models[c].dim();
        Eigen::VectorXd wsum = Eigen::VectorXd::Zero(k);
        std::vector<Eigen::VectorXd> xsum(k, Eigen::VectorXd::Zero(m));
        for (std::int64_t n = 0; n < n_cells; ++n) {
            if (!stack.observed[n]) continue;
            const double pc = post.marg(n, c);
            Eigen::VectorXd x = stack.feature_vector(n);
            for (int i = 0; i < k; ++i) {
                const double w = pc * post.gamma[c][n * k + i];
                wsum[i] += w;
                xsum[i] += w * x;
            }
        }
        ClassMixture mix;
        mix.weights = Eigen::VectorXd::Zero(k);
        mix.components.resize(k);
        std::vector<Eigen::MatrixXd> ssum(k, Eigen::MatrixXd::Zero(m, m));
        std::vector<bool> degenerate(k, false);
        for (int i = 0; i < k; ++i) {
            if (wsum[i] > 0) {
                mix.components[i].mean = xsum[i] / wsum[i];
            } else {
                degenerate[i] = true;
                mix.components[i] = old.class_models[c].components[i];
                if (report)
                    report->kept_parameters.push_back("class" + std::to_string(c) + ".component" +
                                                      std::to_string(i));
            }
        }
        for (std::int64_t n = 0; n < n_cells; ++n) {
            if (!stack.observed[n]) continue;
            const double pc = post.marg(n, c);
            Eigen::VectorXd x = stack.feature_vector(n);
            for (int i = 0; i < k; ++i) {
                if (degenerate[i]) continue;
                const double w = pc * post.gamma[c][n * k + i];
                Eigen::VectorXd d = x - mix.components[i].mean;
                ssum[i] += w * (d * d.transpose());
            }
        }
        const double total = wsum.sum();
        for (int i = 0; i < k; ++i) {
            if (!degenerate[i]) {
                mix.components[i].cov = ssum[i] / wsum[i];
                mix.components[i].finalize();
                mix.weights[i] = total > 0 ? wsum[i] / total : old.class_models[c].weights[i];
            } else {
                mix.weights[i] = old.class_models[c].weights[i];
            }
        }
        const double z = mix.weights.sum();
        if (z > 0) mix.weights /= z;
        next.class_models[c] = std::move(mix);
    }
}

}  // namespace

ModelParams m_step(const SplitTree& tree, const RasterStack& stack, const PosteriorTable& post,
                   const ModelParams& old, MStepReport* report) {
    ModelParams next = old;
    next.generation = old.generation + 1;

    // Transition: the update ratio estimates P(y_n=0 | v=1); the table stores
    // rho = P(y_n=1 | v=1), hence rho = 1 - ratio.
    double num = 0.0, den = 0.0;
    double leaf_num = 0.0;
    std::int64_t leaf_count = 0;
    for (std::int64_t n = 0; n < tree.node_count; ++n) {
        if (tree.is_leaf(n)) {
            leaf_num += post.marg(n, 1);
            ++leaf_count;
        } else {
            num += post.pr(n, 0, 1);
            den += post.pr(n, 0, 1) + post.pr(n, 1, 1);
        }
    }
    if (den > 0) {
        next.rho = 1.0 - num / den;
    } else if (report) {
        report->kept_parameters.push_back("rho");
    }
    if (leaf_count > 0) {
        next.pi = leaf_num / leaf_count;
    } else if (report) {
        report->kept_parameters.push_back("pi");
    }
    next.clamp();

    update_class_mixtures(stack, post, old, next, report);
    return next;
}

ModelParams m_step_single(const SplitTree& tree, const RasterStack& stack,
                          const PosteriorTable& post, const ModelParams& old,
                          MStepReport* report) {
    if (old.class_models[0].size() != 1 || old.class_models[1].size() != 1)
        throw std::runtime_error("m_step_single requires K=1 in both classes");
    return m_step(tree, stack, post, old, report);
}

double expected_log_likelihood(const SplitTree& tree, const RasterStack& stack,
                               const PosteriorTable& post, const ModelParams& params) {
    double ll = 0.0;
    const double log_rho = std::log(params.rho);
    const double log_1mrho = std::log(1.0 - params.rho);
    const double log_pi = std::log(params.pi);
    const double log_1mpi = std::log(1.0 - params.pi);
    // 0 * log 0 = 0: structural zeros carry no posterior mass.
    auto add = [&](double w, double logp) {
        if (w > 0) ll += w * logp;
    };
    for (std::int64_t n = 0; n < tree.node_count; ++n) {
        if (stack.observed[n]) {
            // Emission term over the component indicators: the posterior of
            // (class c, component i) is marg(n,c) * gamma.
            Eigen::VectorXd x = stack.feature_vector(n);
            for (int c = 0; c < 2; ++c) {
                const auto& mix = params.class_models[c];
                const int k = mix.size();
                for (int i = 0; i < k; ++i)
                    add(post.marg(n, c) * post.gamma[c][n * k + i],
                        std::log(mix.weights[i]) + mix.components[i].log_density(x));
            }
        }
        if (tree.is_leaf(n)) {
            add(post.marg(n, 0), log_1mpi);
            add(post.marg(n, 1), log_pi);
        } else {
            // pair index 2*y + v; P(0|0)=1 contributes log 1 = 0
            add(post.pr(n, 0, 1), log_1mrho);
            add(post.pr(n, 1, 1), log_rho);
            add(post.pr(n, 1, 0), -std::numeric_limits<double>::infinity());
        }
    }
    return ll;
}

namespace {

Eigen::VectorXd feature_scales(const RasterStack& stack) {
    const int m = stack.band_count;
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(m), sq = Eigen::VectorXd::Zero(m);
    std::int64_t count = 0;
    for (std::size_t n = 0; n < stack.cell_count(); ++n) {
        if (!stack.observed[n]) continue;
        Eigen::VectorXd x = stack.feature_vector(n);
        mean += x;
        sq += x.cwiseProduct(x);
        ++count;
    }
    Eigen::VectorXd scale = Eigen::VectorXd::Ones(m);
    if (count > 1) {
        mean /= count;
        for (int j = 0; j < m; ++j) {
            double var = sq[j] / count - mean[j] * mean[j];
            if (var > 1e-12) scale[j] = std::sqrt(var);
        }
    }
    return scale;
}

double param_delta(const ModelParams& a, const ModelParams& b, const Eigen::VectorXd& scale) {
    double d = std::max(std::abs(a.rho - b.rho), std::abs(a.pi - b.pi));
    for (int c = 0; c < 2; ++c) {
        const auto& ma = a.class_models[c];
        const auto& mb = b.class_models[c];
        for (int i = 0; i < ma.size(); ++i) {
            d = std::max(d, std::abs(ma.weights[i] - mb.weights[i]));
            for (int j = 0; j < ma.dim(); ++j)
                d = std::max(d, std::abs(ma.components[i].mean[j] - mb.components[i].mean[j]) / scale[j]);
            for (int r = 0; r < ma.dim(); ++r)
                for (int s = 0; s < ma.dim(); ++s)
                    d = std::max(d, std::abs(ma.components[i].cov(r, s) - mb.components[i].cov(r, s)) /
                                        (scale[r] * scale[s]));
        }
    }
    return d;
}

}  // namespace

void EmTrace::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << "iteration,rho,pi,log_likelihood,max_delta\n";
    char buf[256];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g\n", r.iteration, r.rho, r.pi,
                      r.log_likelihood, r.max_delta);
        out << buf;
    }
}

std::pair<ModelParams, EmTrace> run_em(const SplitTree& tree, const RasterStack& stack,
                                       ModelParams init, const EmOptions& opts) {
    EmTrace trace;
    ModelParams params = std::move(init);
    const Eigen::VectorXd scale = feature_scales(stack);
    for (int iter = 1; iter <= opts.max_iterations; ++iter) {
        PosteriorTable post;
        double evidence = 0.0;
        try {
            EmissionTable emis = compute_emissions(stack, params, opts.threads);
            MessageTable msgs;
            forward_pass(tree, stack, params, emis, msgs);
            backward_pass(tree, stack, params, emis, msgs);
            post = posteriors(tree, stack, params, emis, msgs);
            evidence = evidence_log_likelihood(tree, msgs);
        } catch (const std::exception& e) {
            throw std::runtime_error("E-step failed at iteration " + std::to_string(iter) + ": " +
                                     e.what());
        }
        ModelParams next = m_step(tree, stack, post, params);
        const double delta = param_delta(params, next, scale);
        trace.rows.push_back({iter, next.rho, next.pi, evidence, delta});
        params = std::move(next);
        if (delta < opts.tol) {
            trace.converged = true;
            break;
        }
    }
    return {std::move(params), std::move(trace)};
}

}  // namespace floodtree
