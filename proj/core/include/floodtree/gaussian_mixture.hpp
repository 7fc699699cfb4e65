#pragma once

#include "floodtree/raster.hpp"

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

namespace floodtree {

// Single Gaussian with cached Cholesky factor. finalize() must be called
// after the mean/covariance are set and regularizes the covariance when the
// factorization fails.
struct GaussianComponent {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    void finalize();
    double log_density(const Eigen::VectorXd& x) const;
    int dim() const { return static_cast<int>(mean.size()); }

  private:
    Eigen::LLT<Eigen::MatrixXd> llt_;
    double log_norm_ = 0.0;
};

// Per-class emission density: weighted mixture of Gaussians (K=1 is the
// single-modal special case).
struct ClassMixture {
    std::vector<GaussianComponent> components;
    Eigen::VectorXd weights;

    int size() const { return static_cast<int>(components.size()); }
    int dim() const { return components.empty() ? 0 : components[0].dim(); }

    double log_density(const Eigen::VectorXd& x) const;
    // Posterior component weights; sums to 1. On total underflow falls back
    // to the mixture weights and sets *underflowed when provided.
    Eigen::VectorXd responsibilities(const Eigen::VectorXd& x, bool* underflowed = nullptr) const;
};

// GMM-EM on the samples of one class, centroids initialized from K distinct
// seeded draws; stops when log-likelihood gain < 1e-6 or after 100 rounds.
ClassMixture fit_initial_mixture(const TrainingSet& train, int cls, int k, std::uint64_t seed);
ClassMixture fit_mixture(const std::vector<Eigen::VectorXd>& samples, int k, std::uint64_t seed);

void write_mixture(const ClassMixture& mix, std::ostream& out);
ClassMixture read_mixture(std::istream& in);

}  // namespace floodtree
