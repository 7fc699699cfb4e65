#pragma once

#include "floodtree/gaussian_mixture.hpp"

#include <array>
#include <string>

namespace floodtree {

// Transition table parameterization:
//   P(y_n=1 | parent product = 1) = rho,   P(y_n=1 | parent product = 0) = 0
//   leaf prior P(y_n=1) = pi
struct ModelParams {
    double rho = 0.999;
    double pi = 0.5;
    std::array<ClassMixture, 2> class_models;
    int generation = 0;

    static constexpr double kRhoFloor = 1e-6;
    static constexpr double kPiFloor = 1e-6;

    void clamp();
    double log_emission(int cls, const Eigen::VectorXd& x) const {
        return class_models[cls].log_density(x);
    }
};

void write_model(const ModelParams& params, const std::string& path);
ModelParams read_model(const std::string& path);

}  // namespace floodtree
