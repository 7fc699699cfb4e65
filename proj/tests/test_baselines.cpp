#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "floodtree/baselines.hpp"
#include "floodtree/synth.hpp"
#include "test_util.hpp"

#include <cmath>
#include <random>

using namespace floodtree;
using testutil::stack_from;

namespace {

TrainingSet separated_train(std::uint64_t seed, double mu0, double mu1, int per_class = 300) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n0(mu0, 0.5), n1(mu1, 0.5);
    TrainingSet t;
    t.dim = 1;
    for (int i = 0; i < per_class; ++i) {
        t.x.push_back(Eigen::VectorXd::Constant(1, n0(rng)));
        t.label.push_back(0);
        t.x.push_back(Eigen::VectorXd::Constant(1, n1(rng)));
        t.label.push_back(1);
    }
    return t;
}

ModelParams planted_defaults() {
    ModelParams p;
    ClassMixture m0, m1;
    m0.weights = Eigen::VectorXd::Constant(1, 1.0);
    m1.weights = Eigen::VectorXd::Constant(1, 1.0);
    GaussianComponent g0, g1;
    g0.mean = Eigen::VectorXd::Constant(1, -2.0);
    g0.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
    g0.finalize();
    g1.mean = Eigen::VectorXd::Constant(1, 2.0);
    g1.cov = Eigen::MatrixXd::Constant(1, 1, 1.0);
    g1.finalize();
    m0.components.push_back(g0);
    m1.components.push_back(g1);
    p.class_models[0] = std::move(m0);
    p.class_models[1] = std::move(m1);
    return p;
}

}  // namespace

TEST_CASE("mlc fit recovers class moments and priors") {
    TrainingSet t;
    t.dim = 1;
    for (double v : {0.0, 2.0}) {
        t.x.push_back(Eigen::VectorXd::Constant(1, v));
        t.label.push_back(0);
    }
    for (double v : {4.0, 6.0, 8.0}) {
        t.x.push_back(Eigen::VectorXd::Constant(1, v));
        t.label.push_back(1);
    }
    MlcModel m = fit_mlc(t);
    CHECK(m.class_prior[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(m.class_prior[1] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(m.components[0].mean[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.components[1].mean[0] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(m.components[0].cov(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(m.components[1].cov(0, 0) == doctest::Approx(8.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("mlc classifies well-separated points correctly") {
    TrainingSet t = separated_train(31, -3.0, 3.0);
    MlcModel m = fit_mlc(t);
    CHECK(m.classify(Eigen::VectorXd::Constant(1, -3.0)) == 0);
    CHECK(m.classify(Eigen::VectorXd::Constant(1, 3.0)) == 1);
}

TEST_CASE("mlc prior shifts the decision boundary") {
    TrainingSet t;
    t.dim = 1;
    // nine class-0 points at -1, one class-1 point at 1, equal unit spread
    std::mt19937_64 rng(7);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < 900; ++i) {
        t.x.push_back(Eigen::VectorXd::Constant(1, -1.0 + 0.1 * noise(rng)));
        t.label.push_back(0);
    }
    for (int i = 0; i < 100; ++i) {
        t.x.push_back(Eigen::VectorXd::Constant(1, 1.0 + 0.1 * noise(rng)));
        t.label.push_back(1);
    }
    MlcModel m = fit_mlc(t);
    // midpoint would be ambiguous under equal priors; the 9:1 prior pulls it to class 0
    CHECK(m.classify(Eigen::VectorXd::Constant(1, 0.0)) == 0);
}

TEST_CASE("iid baseline separates an easy scene") {
    SceneSpec spec;
    spec.rows = 48;
    spec.cols = 48;
    spec.seed = 77;
    spec.planted_params = planted_defaults();
    spec.observe_fraction = 0.3;
    Scene scene = generate_scene(spec);
    IidParams params = em_iid_fit(scene.stack, scene.train);
    std::vector<std::uint8_t> pred = em_iid_predict(params, scene.stack);
    REQUIRE(pred.size() == scene.stack.cell_count());

    std::size_t correct = 0;
    for (std::size_t n = 0; n < pred.size(); ++n)
        correct += pred[n] == static_cast<std::uint8_t>(scene.stack.truth->values[n]);
    CHECK(static_cast<double>(correct) / pred.size() > 0.8);
}

TEST_CASE("iid baseline keeps the feature-elevation cross block at zero") {
    SceneSpec spec;
    spec.rows = 32;
    spec.cols = 32;
    spec.seed = 78;
    spec.planted_params = planted_defaults();
    Scene scene = generate_scene(spec);
    IidParams params = em_iid_fit(scene.stack, scene.train);
    const int m = params.feature_dim;
    for (int c = 0; c < 2; ++c) {
        REQUIRE(params.components[c].dim() == m + 1);
        for (int j = 0; j < m; ++j) {
            CHECK(params.components[c].cov(j, m) == 0.0);
            CHECK(params.components[c].cov(m, j) == 0.0);
        }
    }
}

TEST_CASE("iid fit is deterministic for a fixed seed") {
    SceneSpec spec;
    spec.rows = 24;
    spec.cols = 24;
    spec.seed = 79;
    spec.planted_params = planted_defaults();
    Scene scene = generate_scene(spec);
    IidParams a = em_iid_fit(scene.stack, scene.train, 40, 1e-4, 3);
    IidParams b = em_iid_fit(scene.stack, scene.train, 40, 1e-4, 3);
    CHECK(a.class_prior[0] == b.class_prior[0]);
    for (int c = 0; c < 2; ++c) {
        CHECK((a.components[c].mean - b.components[c].mean).norm() == 0.0);
        CHECK((a.components[c].cov - b.components[c].cov).norm() == 0.0);
    }
}

TEST_CASE("elevation marginal density matches the 1-D Gaussian") {
    SceneSpec spec;
    spec.rows = 24;
    spec.cols = 24;
    spec.seed = 80;
    spec.planted_params = planted_defaults();
    Scene scene = generate_scene(spec);
    IidParams params = em_iid_fit(scene.stack, scene.train);
    const int m = params.feature_dim;
    for (int c = 0; c < 2; ++c) {
        const double mu = params.components[c].mean[m];
        const double var = params.components[c].cov(m, m);
        const double x = mu + 0.7 * std::sqrt(var);
        const double expected =
            -0.5 * std::log(2.0 * M_PI * var) - 0.5 * (x - mu) * (x - mu) / var;
        CHECK(params.log_elevation_density(c, x) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("label propagation clamps observed cells to their mlc labels") {
    TrainingSet t = separated_train(41, -3.0, 3.0);
    // chain of 5 cells; only cell 0 observed, far in class-1 territory
    RasterStack stack = stack_from(1, 5, {1, 2, 3, 4, 5}, {{3.0, 0, 0, 0, 0}}, {1, 0, 0, 0, 0});
    SplitTree tree = build_split_tree(stack.elevation);
    std::vector<std::uint8_t> pred = lp_structure(stack, tree, t);
    CHECK(pred[0] == 1);
    // scores diffuse from the single clamped cell: everything ends up class 1
    for (auto c : pred) CHECK(c == 1);
}

TEST_CASE("label propagation spreads both labels along the chain") {
    TrainingSet t = separated_train(43, -3.0, 3.0);
    // observed endpoints with opposite classes
    RasterStack stack = stack_from(1, 7, {1, 2, 3, 4, 5, 6, 7},
                                   {{3.0, 0, 0, 0, 0, 0, -3.0}}, {1, 0, 0, 0, 0, 0, 1});
    SplitTree tree = build_split_tree(stack.elevation);
    std::vector<std::uint8_t> pred = lp_structure(stack, tree, t);
    CHECK(pred[0] == 1);
    CHECK(pred[6] == 0);
    // cells adjacent to a clamped endpoint take its label
    CHECK(pred[1] == 1);
    CHECK(pred[5] == 0);
}
