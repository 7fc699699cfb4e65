#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "floodtree/gaussian_mixture.hpp"

#include <cmath>
#include <random>
#include <sstream>

using namespace floodtree;

namespace {

ClassMixture make_1d(std::vector<double> means, std::vector<double> vars,
                     std::vector<double> weights) {
    ClassMixture mix;
    mix.weights = Eigen::Map<Eigen::VectorXd>(weights.data(), weights.size());
    for (std::size_t i = 0; i < means.size(); ++i) {
        GaussianComponent g;
        g.mean = Eigen::VectorXd::Constant(1, means[i]);
        g.cov = Eigen::MatrixXd::Constant(1, 1, vars[i]);
        g.finalize();
        mix.components.push_back(std::move(g));
    }
    return mix;
}

Eigen::VectorXd vec1(double x) { return Eigen::VectorXd::Constant(1, x); }

}  // namespace

TEST_CASE("standard normal at the mode") {
    ClassMixture mix = make_1d({0.0}, {1.0}, {1.0});
    CHECK(mix.log_density(vec1(0.0)) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
}

TEST_CASE("duplicate components collapse to the single density") {
    ClassMixture one = make_1d({1.5}, {0.7}, {1.0});
    ClassMixture two = make_1d({1.5, 1.5}, {0.7, 0.7}, {0.5, 0.5});
    for (double x : {-2.0, 0.0, 1.5, 4.0})
        CHECK(two.log_density(vec1(x)) == doctest::Approx(one.log_density(vec1(x))).epsilon(1e-12));
}

TEST_CASE("2-component 2-D density matches direct summed evaluation") {
    ClassMixture mix;
    mix.weights = Eigen::Vector2d(0.3, 0.7);
    GaussianComponent a, b;
    a.mean = Eigen::Vector2d(1.0, -1.0);
    a.cov = (Eigen::Matrix2d() << 2.0, 0.5, 0.5, 1.0).finished();
    a.finalize();
    b.mean = Eigen::Vector2d(-2.0, 3.0);
    b.cov = (Eigen::Matrix2d() << 1.5, -0.3, -0.3, 0.8).finished();
    b.finalize();
    mix.components = {a, b};

    // independent route: direct linear-domain sum of the closed-form densities
    Eigen::Vector2d x(0.5, 0.5);
    auto direct = [&](const GaussianComponent& g) {
        Eigen::Matrix2d inv = g.cov.inverse();
        Eigen::Vector2d d = Eigen::Vector2d(x) - Eigen::Vector2d(g.mean);
        double quad = d.transpose() * inv * d;
        return std::exp(-0.5 * quad) / (2.0 * M_PI * std::sqrt(g.cov.determinant()));
    };
    double expected = std::log(0.3 * direct(a) + 0.7 * direct(b));
    CHECK(mix.log_density(x) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("K=1 fit equals sample mean and biased covariance") {
    TrainingSet t;
    t.dim = 2;
    std::vector<Eigen::Vector2d> pts = {{1, 2}, {3, 4}, {5, 0}, {2, 2}};
    for (const auto& p : pts) {
        t.x.push_back(p);
        t.label.push_back(0);
    }
    t.x.push_back(Eigen::Vector2d(0, 0));
    t.label.push_back(1);

    ClassMixture mix = fit_initial_mixture(t, 0, 1, 7);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (const auto& p : pts) mean += p;
    mean /= 4.0;
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (const auto& p : pts) cov += (p - mean) * (p - mean).transpose();
    cov /= 4.0;
    CHECK((mix.components[0].mean - mean).norm() == doctest::Approx(0.0));
    CHECK((mix.components[0].cov - cov).norm() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("well-separated clusters are recovered") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n0(-3.0, 0.4), n1(3.0, 0.4);
    TrainingSet t;
    t.dim = 1;
    for (int i = 0; i < 400; ++i) {
        t.x.push_back(vec1(i % 2 ? n0(rng) : n1(rng)));
        t.label.push_back(0);
    }
    t.x.push_back(vec1(0.0));
    t.label.push_back(1);
    ClassMixture mix = fit_initial_mixture(t, 0, 2, 123);
    std::vector<double> means = {mix.components[0].mean[0], mix.components[1].mean[0]};
    std::sort(means.begin(), means.end());
    CHECK(means[0] == doctest::Approx(-3.0).epsilon(0.1 / 3.0));
    CHECK(means[1] == doctest::Approx(3.0).epsilon(0.1 / 3.0));
}

TEST_CASE("more components than samples is an error") {
    TrainingSet t;
    t.dim = 1;
    t.x = {vec1(0), vec1(1), vec1(2)};
    t.label = {0, 0, 1};  // only two class-0 samples
    CHECK_THROWS_AS(fit_initial_mixture(t, 0, 3, 1), std::runtime_error);
}

TEST_CASE("responsibilities") {
    SUBCASE("K=1 is always [1]") {
        ClassMixture mix = make_1d({2.0}, {1.0}, {1.0});
        CHECK(mix.responsibilities(vec1(99.0))[0] == doctest::Approx(1.0));
    }
    SUBCASE("dominant component near its mean") {
        ClassMixture mix = make_1d({0.0, 50.0}, {1.0, 1.0}, {0.5, 0.5});
        Eigen::VectorXd g = mix.responsibilities(vec1(0.0));
        CHECK(g[0] == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(g[1] == doctest::Approx(0.0).epsilon(1e-9));
    }
    SUBCASE("hand-computed two-component ratio") {
        // phi = (0.4, 0.6), N(0,1) and N(2,4), x = 1
        ClassMixture mix = make_1d({0.0, 2.0}, {1.0, 4.0}, {0.4, 0.6});
        const double d0 = 0.4 * std::exp(-0.5) / std::sqrt(2.0 * M_PI);
        const double d1 = 0.6 * std::exp(-0.5 * 0.25) / std::sqrt(2.0 * M_PI * 4.0);
        Eigen::VectorXd g = mix.responsibilities(vec1(1.0));
        CHECK(g[0] == doctest::Approx(d0 / (d0 + d1)).epsilon(1e-12));
        CHECK(g[1] == doctest::Approx(d1 / (d0 + d1)).epsilon(1e-12));
    }
    SUBCASE("sum to one on random inputs") {
        std::mt19937_64 rng(9);
        std::uniform_real_distribution<double> uni(-10.0, 10.0);
        ClassMixture mix = make_1d({-1.0, 0.5, 2.0}, {1.0, 0.5, 3.0}, {0.2, 0.3, 0.5});
        for (int i = 0; i < 100; ++i)
            CHECK(mix.responsibilities(vec1(uni(rng))).sum() == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("1-D mixture density integrates to 1") {
    ClassMixture mix = make_1d({-2.0, 1.0}, {0.5, 2.0}, {0.35, 0.65});
    // Simpson quadrature over the union of [mu - 8 sigma, mu + 8 sigma]
    const double lo = -2.0 - 8.0 * std::sqrt(0.5), hi = 1.0 + 8.0 * std::sqrt(2.0);
    const int steps = 20000;
    const double h = (hi - lo) / steps;
    double integral = 0.0;
    for (int i = 0; i <= steps; ++i) {
        const double w = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
        integral += w * std::exp(mix.log_density(vec1(lo + i * h)));
    }
    integral *= h / 3.0;
    CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("log_density invariant under component permutation") {
    ClassMixture a = make_1d({-1.0, 2.0, 4.0}, {1.0, 2.0, 0.5}, {0.2, 0.5, 0.3});
    ClassMixture b = make_1d({4.0, -1.0, 2.0}, {0.5, 1.0, 2.0}, {0.3, 0.2, 0.5});
    for (double x : {-3.0, 0.0, 2.5, 6.0})
        CHECK(a.log_density(vec1(x)) == doctest::Approx(b.log_density(vec1(x))).epsilon(1e-12));
}

TEST_CASE("mixture text serialization round-trips at full precision") {
    ClassMixture mix;
    mix.weights = Eigen::Vector2d(0.3123456789012345, 0.6876543210987655);
    GaussianComponent g;
    g.mean = Eigen::Vector2d(1.0 / 3.0, -7.123456789e-3);
    g.cov = (Eigen::Matrix2d() << 2.0 / 7.0, 0.01, 0.01, 0.9).finished();
    g.finalize();
    mix.components = {g, g};
    std::stringstream ss;
    write_mixture(mix, ss);
    ClassMixture back = read_mixture(ss);
    REQUIRE(back.size() == 2);
    for (int i = 0; i < 2; ++i) {
        CHECK(back.weights[i] == mix.weights[i]);
        CHECK((back.components[i].mean - mix.components[i].mean).norm() == 0.0);
        CHECK((back.components[i].cov - mix.components[i].cov).norm() == 0.0);
    }
}

TEST_CASE("degenerate covariance is regularized") {
    GaussianComponent g;
    g.mean = Eigen::Vector2d(0, 0);
    g.cov = Eigen::Matrix2d::Zero();   // singular
    g.cov(0, 0) = 1.0;
    CHECK_NOTHROW(g.finalize());
    CHECK(std::isfinite(g.log_density(Eigen::Vector2d(0.1, 0.1))));
}
