#pragma once

#include "floodtree/gaussian_mixture.hpp"
#include "floodtree/raster.hpp"
#include "floodtree/split_tree.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace floodtree {

// Parameters of the i.i.d. EM baseline over the stacked feature [x; elevation],
// with the feature-elevation cross-covariance forced to zero.
struct IidParams {
    std::array<double, 2> class_prior{0.5, 0.5};
    std::array<GaussianComponent, 2> components;   // dim = m + 1
    int feature_dim = 0;

    // Marginal density of the elevation coordinate alone.
    double log_elevation_density(int cls, double elevation) const;
};

IidParams em_iid_fit(const RasterStack& stack, const TrainingSet& train, int max_iter = 40,
                     double tol = 1e-4, std::uint64_t seed = 0);
std::vector<std::uint8_t> em_iid_predict(const IidParams& params, const RasterStack& stack);

// Maximum likelihood classifier: argmax over classes of prior * Gaussian
// likelihood fitted on the training samples.
struct MlcModel {
    std::array<double, 2> class_prior{0.5, 0.5};
    std::array<GaussianComponent, 2> components;

    int classify(const Eigen::VectorXd& x) const;
};

MlcModel fit_mlc(const TrainingSet& train);

// Label propagation over undirected split-tree edges with MLC-labeled
// observed cells clamped; score averaging until change < 1e-6 or 1000 sweeps.
std::vector<std::uint8_t> lp_structure(const RasterStack& stack, const SplitTree& tree,
                                       const TrainingSet& train);

}  // namespace floodtree
