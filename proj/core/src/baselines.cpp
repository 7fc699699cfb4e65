#include "floodtree/baselines.hpp"

#include <cmath>
#include <stdexcept>

namespace floodtree {

namespace {

// Biased class-conditional moments of a sample list.
void class_moments(const std::vector<Eigen::VectorXd>& xs, Eigen::VectorXd& mean,
                   Eigen::MatrixXd& cov) {
    const int m = static_cast<int>(xs[0].size());
    mean = Eigen::VectorXd::Zero(m);
    for (const auto& x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    cov = Eigen::MatrixXd::Zero(m, m);
    for (const auto& x : xs) {
        Eigen::VectorXd d = x - mean;
        cov += d * d.transpose();
    }
    cov /= static_cast<double>(xs.size());
}

// Zero the cross-covariance between the feature block and the elevation
// coordinate (last row/column).
void impose_block_structure(Eigen::MatrixXd& cov, int m) {
    for (int j = 0; j < m; ++j) {
        cov(j, m) = 0.0;
        cov(m, j) = 0.0;
    }
}

}  // namespace

double IidParams::log_elevation_density(int cls, double elevation) const {
    const int m = feature_dim;
    const double mu = components[cls].mean[m];
    const double var = components[cls].cov(m, m);
    const double d = elevation - mu;
    return -0.5 * std::log(2.0 * M_PI * var) - 0.5 * d * d / var;
}

IidParams em_iid_fit(const RasterStack& stack, const TrainingSet& train, int max_iter,
                     double tol, std::uint64_t /*seed*/) {
    const int m = stack.band_count;
    if (train.dim != m) throw std::runtime_error("training set dimension does not match stack");
    const auto n_cells = static_cast<std::int64_t>(stack.cell_count());

    // Collect observed-cell stacked vectors [x; elevation].
    std::vector<std::int64_t> obs;
    for (std::int64_t n = 0; n < n_cells; ++n)
        if (stack.observed[n]) obs.push_back(n);
    if (obs.empty()) throw std::runtime_error("no observed cells to fit");
    std::vector<Eigen::VectorXd> xs(obs.size());
    for (std::size_t i = 0; i < obs.size(); ++i) {
        Eigen::VectorXd v(m + 1);
        v.head(m) = stack.feature_vector(obs[i]);
        v[m] = stack.elevation.values[obs[i]];
        xs[i] = v;
    }

    // Initialization: feature block from training statistics; the elevation
    // coordinate starts identical across classes (overall observed-region
    // moments) and separates through the EM updates.
    double e_mean = 0.0, e_var = 0.0;
    for (const auto& v : xs) e_mean += v[m];
    e_mean /= static_cast<double>(xs.size());
    for (const auto& v : xs) e_var += (v[m] - e_mean) * (v[m] - e_mean);
    e_var /= static_cast<double>(xs.size());
    if (!(e_var > 0)) e_var = 1.0;

    IidParams p;
    p.feature_dim = m;
    p.class_prior = {0.5, 0.5};
    for (int c = 0; c < 2; ++c) {
        auto cls_samples = train.class_samples(c);
        if (cls_samples.empty()) throw std::runtime_error("training set missing a class");
        Eigen::VectorXd fmean;
        Eigen::MatrixXd fcov;
        class_moments(cls_samples, fmean, fcov);
        GaussianComponent g;
        g.mean = Eigen::VectorXd::Zero(m + 1);
        g.mean.head(m) = fmean;
        g.mean[m] = e_mean;
        g.cov = Eigen::MatrixXd::Zero(m + 1, m + 1);
        g.cov.topLeftCorner(m, m) = fcov;
        g.cov(m, m) = e_var;
        g.finalize();
        p.components[c] = std::move(g);
    }

    std::vector<double> post(xs.size());
    for (int iter = 0; iter < max_iter; ++iter) {
        // E-step: per-cell class posterior from prior * density.
        for (std::size_t i = 0; i < xs.size(); ++i) {
            const double l0 = std::log(p.class_prior[0]) + p.components[0].log_density(xs[i]);
            const double l1 = std::log(p.class_prior[1]) + p.components[1].log_density(xs[i]);
            const double mx = std::max(l0, l1);
            const double w0 = std::exp(l0 - mx), w1 = std::exp(l1 - mx);
            post[i] = w1 / (w0 + w1);
        }
        // M-step.
        double max_delta = 0.0;
        for (int c = 0; c < 2; ++c) {
            double wsum = 0.0;
            Eigen::VectorXd xsum = Eigen::VectorXd::Zero(m + 1);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double w = c == 1 ? post[i] : 1.0 - post[i];
                wsum += w;
                xsum += w * xs[i];
            }
            if (!(wsum > 0)) continue;
            Eigen::VectorXd mu = xsum / wsum;
            Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m + 1, m + 1);
            for (std::size_t i = 0; i < xs.size(); ++i) {
                const double w = c == 1 ? post[i] : 1.0 - post[i];
                Eigen::VectorXd d = xs[i] - mu;
                cov += w * (d * d.transpose());
            }
            cov /= wsum;
            impose_block_structure(cov, m);
            const double new_prior = wsum / static_cast<double>(xs.size());
            max_delta = std::max(max_delta, std::abs(new_prior - p.class_prior[c]));
            max_delta = std::max(max_delta, (mu - p.components[c].mean).cwiseAbs().maxCoeff());
            p.class_prior[c] = new_prior;
            p.components[c].mean = mu;
            p.components[c].cov = cov;
            p.components[c].finalize();
        }
        const double z = p.class_prior[0] + p.class_prior[1];
        p.class_prior[0] /= z;
        p.class_prior[1] /= z;
        if (max_delta < tol) break;
    }
    return p;
}

std::vector<std::uint8_t> em_iid_predict(const IidParams& p, const RasterStack& stack) {
    const auto n_cells = static_cast<std::int64_t>(stack.cell_count());
    const int m = p.feature_dim;
    std::vector<std::uint8_t> out(n_cells, 0);
    for (std::int64_t n = 0; n < n_cells; ++n) {
        double l0, l1;
        if (stack.observed[n]) {
            Eigen::VectorXd v(m + 1);
            v.head(m) = stack.feature_vector(n);
            v[m] = stack.elevation.values[n];
            l0 = std::log(p.class_prior[0]) + p.components[0].log_density(v);
            l1 = std::log(p.class_prior[1]) + p.components[1].log_density(v);
        } else {
            const double e = stack.elevation.values[n];
            l0 = std::log(p.class_prior[0]) + p.log_elevation_density(0, e);
            l1 = std::log(p.class_prior[1]) + p.log_elevation_density(1, e);
        }
        out[n] = l1 > l0 ? 1 : 0;   // exact tie falls to class 0
    }
    return out;
}

int MlcModel::classify(const Eigen::VectorXd& x) const {
    const double l0 = std::log(class_prior[0]) + components[0].log_density(x);
    const double l1 = std::log(class_prior[1]) + components[1].log_density(x);
    return l1 > l0 ? 1 : 0;
}

MlcModel fit_mlc(const TrainingSet& train) {
    MlcModel mlc;
    const auto total = static_cast<double>(train.size());
    for (int c = 0; c < 2; ++c) {
        auto xs = train.class_samples(c);
        if (xs.empty()) throw std::runtime_error("training set missing a class");
        Eigen::VectorXd mean;
        Eigen::MatrixXd cov;
        class_moments(xs, mean, cov);
        mlc.components[c].mean = std::move(mean);
        mlc.components[c].cov = std::move(cov);
        mlc.components[c].finalize();
        mlc.class_prior[c] = static_cast<double>(xs.size()) / total;
    }
    return mlc;
}

std::vector<std::uint8_t> lp_structure(const RasterStack& stack, const SplitTree& tree,
                                       const TrainingSet& train) {
    const std::int64_t n_cells = tree.node_count;
    std::int64_t n_obs = 0;
    for (auto o : stack.observed) n_obs += o;
    if (n_obs == 0) throw std::runtime_error("label propagation requires observed cells");

    const MlcModel mlc = fit_mlc(train);
    std::vector<std::uint8_t> clamped(n_cells, 0);
    std::vector<double> score(n_cells, 0.5), next(n_cells, 0.5);
    for (std::int64_t n = 0; n < n_cells; ++n) {
        if (!stack.observed[n]) continue;
        clamped[n] = 1;
        score[n] = static_cast<double>(mlc.classify(stack.feature_vector(n)));
    }

    for (int sweep = 0; sweep < 1000; ++sweep) {
        double max_change = 0.0;
        for (std::int64_t n = 0; n < n_cells; ++n) {
            if (clamped[n]) {
                next[n] = score[n];
                continue;
            }
            double sum = 0.0;
            int deg = 0;
            for (auto k : tree.parents(n)) {
                sum += score[k];
                ++deg;
            }
            if (tree.child[n] >= 0) {
                sum += score[tree.child[n]];
                ++deg;
            }
            next[n] = deg > 0 ? sum / deg : score[n];
            max_change = std::max(max_change, std::abs(next[n] - score[n]));
        }
        score.swap(next);
        if (max_change < 1e-6) break;
    }

    std::vector<std::uint8_t> out(n_cells, 0);
    for (std::int64_t n = 0; n < n_cells; ++n) out[n] = score[n] > 0.5 ? 1 : 0;
    return out;
}

}  // namespace floodtree
