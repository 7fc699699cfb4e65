#include "floodtree/gaussian_mixture.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <stdexcept>

namespace floodtree {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;
}

void GaussianComponent::finalize() {
    if (mean.size() == 0 || cov.rows() != mean.size() || cov.cols() != mean.size())
        throw std::runtime_error("gaussian component has inconsistent dimensions");
    cov = (cov + cov.transpose()).eval() / 2.0;
    const int m = dim();
    double eps = 1e-6 * cov.trace() / m;
    if (!(eps > 0)) eps = 1e-12;
    for (int attempt = 0; attempt < 40; ++attempt) {
        llt_.compute(cov);
        if (llt_.info() == Eigen::Success) {
            double log_det = 0.0;
            for (int i = 0; i < m; ++i) log_det += std::log(llt_.matrixL()(i, i));
            log_norm_ = -0.5 * m * kLog2Pi - log_det;
            if (std::isfinite(log_norm_)) return;
        }
        cov += eps * Eigen::MatrixXd::Identity(m, m);
        eps *= 10.0;
    }
    throw std::runtime_error("covariance not positive-definite after regularization");
}

double GaussianComponent::log_density(const Eigen::VectorXd& x) const {
    Eigen::VectorXd d = x - mean;
    llt_.matrixL().solveInPlace(d);
    return log_norm_ - 0.5 * d.squaredNorm();
}

double ClassMixture::log_density(const Eigen::VectorXd& x) const {
    double max_term = -std::numeric_limits<double>::infinity();
    const int k = size();
    double terms[16];
    std::vector<double> big;
    double* t = k <= 16 ? terms : (big.resize(k), big.data());
    for (int i = 0; i < k; ++i) {
        t[i] = std::log(weights[i]) + components[i].log_density(x);
        max_term = std::max(max_term, t[i]);
    }
    if (!std::isfinite(max_term)) return max_term;
    double s = 0.0;
    for (int i = 0; i < k; ++i) s += std::exp(t[i] - max_term);
    return max_term + std::log(s);
}

Eigen::VectorXd ClassMixture::responsibilities(const Eigen::VectorXd& x, bool* underflowed) const {
    const int k = size();
    if (underflowed) *underflowed = false;
    Eigen::VectorXd t(k);
    double max_term = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < k; ++i) {
        t[i] = std::log(weights[i]) + components[i].log_density(x);
        max_term = std::max(max_term, t[i]);
    }
    if (!std::isfinite(max_term)) {
        if (underflowed) *underflowed = true;
        return weights;
    }
    double s = 0.0;
    for (int i = 0; i < k; ++i) {
        t[i] = std::exp(t[i] - max_term);
        s += t[i];
    }
    return t / s;
}

namespace {

// Mean and biased covariance, optionally weighted.
void weighted_moments(const std::vector<Eigen::VectorXd>& xs, const Eigen::VectorXd& w,
                      Eigen::VectorXd& mean, Eigen::MatrixXd& cov) {
    const int m = static_cast<int>(xs[0].size());
    const double wsum = w.sum();
    mean = Eigen::VectorXd::Zero(m);
    for (std::size_t i = 0; i < xs.size(); ++i) mean += w[i] * xs[i];
    mean /= wsum;
    cov = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        Eigen::VectorXd d = xs[i] - mean;
        cov += w[i] * (d * d.transpose());
    }
    cov /= wsum;
}

}  // namespace

ClassMixture fit_mixture(const std::vector<Eigen::VectorXd>& samples, int k, std::uint64_t seed) {
    const auto n = static_cast<std::int64_t>(samples.size());
    if (k < 1) throw std::runtime_error("mixture size must be >= 1");
    if (n < k)
        throw std::runtime_error("fewer samples (" + std::to_string(n) +
                                 ") than mixture components (" + std::to_string(k) + ")");
    const int m = static_cast<int>(samples[0].size());

    // Shared initial covariance: biased sample covariance of the whole class.
    Eigen::VectorXd mean0;
    Eigen::MatrixXd cov0;
    weighted_moments(samples, Eigen::VectorXd::Ones(n), mean0, cov0);

    // Farthest-point seeding: a random first centroid, then each next one is
    // the sample farthest from the centroids chosen so far. Avoids the stuck
    // symmetric start that two draws from the same cluster would produce.
    ClassMixture mix;
    mix.weights = Eigen::VectorXd::Constant(k, 1.0 / k);
    std::mt19937_64 rng(seed);
    std::vector<Eigen::VectorXd> centroids;
    centroids.push_back(samples[std::uniform_int_distribution<std::int64_t>(0, n - 1)(rng)]);
    Eigen::VectorXd min_d2 = Eigen::VectorXd::Constant(n, std::numeric_limits<double>::infinity());
    while (static_cast<int>(centroids.size()) < k) {
        std::int64_t far = 0;
        for (std::int64_t i = 0; i < n; ++i) {
            min_d2[i] = std::min(min_d2[i], (samples[i] - centroids.back()).squaredNorm());
            if (min_d2[i] > min_d2[far]) far = i;
        }
        centroids.push_back(samples[far]);
    }
    for (int i = 0; i < k; ++i) {
        GaussianComponent g;
        g.mean = centroids[i];
        g.cov = cov0;
        g.finalize();
        mix.components.push_back(std::move(g));
    }
    if (k == 1) {
        mix.components[0].mean = mean0;
        mix.components[0].cov = cov0;
        mix.components[0].finalize();
        return mix;
    }

    double prev_ll = -std::numeric_limits<double>::infinity();
    Eigen::MatrixXd resp(n, k);
    for (int iter = 0; iter < 100; ++iter) {
        double ll = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            resp.row(i) = mix.responsibilities(samples[i]).transpose();
            ll += mix.log_density(samples[i]);
        }
        if (ll - prev_ll < 1e-6 && iter > 0) break;
        prev_ll = ll;
        for (int j = 0; j < k; ++j) {
            Eigen::VectorXd w = resp.col(j);
            double wsum = w.sum();
            if (wsum <= 0) continue;   // degenerate component keeps old values
            Eigen::VectorXd mu;
            Eigen::MatrixXd sig;
            weighted_moments(samples, w, mu, sig);
            mix.components[j].mean = mu;
            mix.components[j].cov = sig;
            mix.components[j].finalize();
            mix.weights[j] = wsum / n;
        }
        mix.weights /= mix.weights.sum();
    }
    return mix;
}

ClassMixture fit_initial_mixture(const TrainingSet& train, int cls, int k, std::uint64_t seed) {
    return fit_mixture(train.class_samples(cls), k, seed);
}

void write_mixture(const ClassMixture& mix, std::ostream& out) {
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    out << "K " << mix.size() << " dim " << mix.dim() << "\n";
    for (int i = 0; i < mix.size(); ++i) {
        out << "weight ";
        put(mix.weights[i]);
        out << "\nmean";
        for (int j = 0; j < mix.dim(); ++j) {
            out << ' ';
            put(mix.components[i].mean[j]);
        }
        out << "\ncov";
        for (int r = 0; r < mix.dim(); ++r)
            for (int c = 0; c < mix.dim(); ++c) {
                out << ' ';
                put(mix.components[i].cov(r, c));
            }
        out << "\n";
    }
}

ClassMixture read_mixture(std::istream& in) {
    std::string tag;
    int k = 0, m = 0;
    if (!(in >> tag >> k) || tag != "K") throw std::runtime_error("bad mixture block: expected 'K'");
    if (!(in >> tag >> m) || tag != "dim") throw std::runtime_error("bad mixture block: expected 'dim'");
    ClassMixture mix;
    mix.weights = Eigen::VectorXd::Zero(k);
    for (int i = 0; i < k; ++i) {
        if (!(in >> tag >> mix.weights[i]) || tag != "weight")
            throw std::runtime_error("bad mixture block: expected 'weight'");
        GaussianComponent g;
        g.mean = Eigen::VectorXd::Zero(m);
        g.cov = Eigen::MatrixXd::Zero(m, m);
        if (!(in >> tag) || tag != "mean") throw std::runtime_error("bad mixture block: expected 'mean'");
        for (int j = 0; j < m; ++j) in >> g.mean[j];
        if (!(in >> tag) || tag != "cov") throw std::runtime_error("bad mixture block: expected 'cov'");
        for (int r = 0; r < m; ++r)
            for (int c = 0; c < m; ++c) in >> g.cov(r, c);
        if (!in) throw std::runtime_error("truncated mixture block");
        g.finalize();
        mix.components.push_back(std::move(g));
    }
    return mix;
}

}  // namespace floodtree
