#pragma once

#include "floodtree/message_passing.hpp"
#include "floodtree/model.hpp"
#include "floodtree/raster.hpp"
#include "floodtree/split_tree.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace floodtree {

struct EmIterationRow {
    int iteration = 0;
    double rho = 0.0;
    double pi = 0.0;
    double log_likelihood = 0.0;   // observed-data log-likelihood of the entering parameters
    double max_delta = 0.0;
};

struct EmTrace {
    std::vector<EmIterationRow> rows;
    bool converged = false;

    void write_csv(const std::string& path) const;
};

struct EmOptions {
    int max_iterations = 40;
    double tol = 1e-4;
    int threads = 0;
};

// Denominator-zero events keep the old parameter value and are reported here.
struct MStepReport {
    std::vector<std::string> kept_parameters;
};

ModelParams initialize(const TrainingSet& train, int k0, int k1, double pi0, double rho0,
                       std::uint64_t seed);

ModelParams m_step(const SplitTree& tree, const RasterStack& stack, const PosteriorTable& post,
                   const ModelParams& old, MStepReport* report = nullptr);

// Single-modal closed-form updates (K=1 both classes); bit-identical to
// m_step in that configuration.
ModelParams m_step_single(const SplitTree& tree, const RasterStack& stack,
                          const PosteriorTable& post, const ModelParams& old,
                          MStepReport* report = nullptr);

// Posterior expectation of the complete-data log-likelihood under `params`,
// with posteriors held fixed.
double expected_log_likelihood(const SplitTree& tree, const RasterStack& stack,
                               const PosteriorTable& post, const ModelParams& params);

std::pair<ModelParams, EmTrace> run_em(const SplitTree& tree, const RasterStack& stack,
                                       ModelParams init, const EmOptions& opts = {});

}  // namespace floodtree
