#include "floodtree/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>

namespace floodtree {

namespace {

RasterGrid bowl_terrain(int rows, int cols) {
    RasterGrid g = RasterGrid::filled(rows, cols, 0.0);
    const double cr = (rows - 1) / 2.0, cc = (cols - 1) / 2.0;
    const double scale = cr * cr + cc * cc;
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c)
            g.at(r, c) = ((r - cr) * (r - cr) + (c - cc) * (c - cc)) / scale * 100.0;
    return g;
}

RasterGrid ridged_terrain(int rows, int cols) {
    RasterGrid g = RasterGrid::filled(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            const double u = 2.0 * M_PI * r / rows, v = 2.0 * M_PI * c / cols;
            g.at(r, c) = 50.0 + 20.0 * std::sin(2 * u) * std::cos(3 * v) + 10.0 * std::sin(5 * v) +
                         8.0 * std::cos(3 * u);
        }
    return g;
}

// Seeded diamond-square midpoint displacement on a (2^k+1) lattice, cropped.
RasterGrid fractal_terrain(int rows, int cols, double roughness, std::uint64_t seed) {
    int size = 1;
    while (size + 1 < std::max(rows, cols)) size *= 2;
    const int n = size + 1;
    std::vector<double> h(static_cast<std::size_t>(n) * n, 0.0);
    auto at = [&](int r, int c) -> double& { return h[static_cast<std::size_t>(r) * n + c]; };

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    double amp = 50.0;
    at(0, 0) = amp * uni(rng);
    at(0, size) = amp * uni(rng);
    at(size, 0) = amp * uni(rng);
    at(size, size) = amp * uni(rng);

    for (int step = size; step > 1; step /= 2) {
        const int half = step / 2;
        // diamond
        for (int r = half; r < n; r += step)
            for (int c = half; c < n; c += step) {
                const double avg = (at(r - half, c - half) + at(r - half, c + half) +
                                    at(r + half, c - half) + at(r + half, c + half)) /
                                   4.0;
                at(r, c) = avg + amp * uni(rng);
            }
        // square
        for (int r = 0; r < n; r += half)
            for (int c = (r / half) % 2 == 0 ? half : 0; c < n; c += step) {
                double sum = 0.0;
                int cnt = 0;
                if (r >= half) sum += at(r - half, c), ++cnt;
                if (r + half < n) sum += at(r + half, c), ++cnt;
                if (c >= half) sum += at(r, c - half), ++cnt;
                if (c + half < n) sum += at(r, c + half), ++cnt;
                at(r, c) = sum / cnt + amp * uni(rng);
            }
        amp *= std::pow(2.0, -roughness);
    }

    RasterGrid g = RasterGrid::filled(rows, cols, 0.0);
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) g.at(r, c) = at(r, c);
    return g;
}

Eigen::VectorXd sample_gaussian(const GaussianComponent& comp, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const int m = comp.dim();
    Eigen::VectorXd z(m);
    for (int j = 0; j < m; ++j) z[j] = normal(rng);
    Eigen::LLT<Eigen::MatrixXd> llt(comp.cov);
    return comp.mean + llt.matrixL() * z;
}

Eigen::VectorXd sample_mixture(const ClassMixture& mix, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double u = uni(rng), acc = 0.0;
    int pick = mix.size() - 1;
    for (int i = 0; i < mix.size(); ++i) {
        acc += mix.weights[i];
        if (u <= acc) {
            pick = i;
            break;
        }
    }
    return sample_gaussian(mix.components[pick], rng);
}

}  // namespace

RasterGrid make_terrain(const SceneSpec& spec) {
    switch (spec.terrain) {
        case TerrainKind::Bowl: return bowl_terrain(spec.rows, spec.cols);
        case TerrainKind::Ridged: return ridged_terrain(spec.rows, spec.cols);
        case TerrainKind::Fractal:
            return fractal_terrain(spec.rows, spec.cols, spec.roughness, spec.seed);
    }
    throw std::runtime_error("unknown terrain kind");
}

Scene generate_scene(const SceneSpec& spec) {
    if (!(spec.observe_fraction > 0.0 && spec.observe_fraction <= 1.0))
        throw std::runtime_error("observe_fraction must be in (0, 1]");
    const int m = spec.planted_params.class_models[0].dim();
    if (m < 1 || spec.planted_params.class_models[1].dim() != m)
        throw std::runtime_error("planted params must carry mixtures of equal dimension");

    Scene scene;
    RasterGrid elevation = make_terrain(spec);
    scene.tree = build_split_tree(elevation);
    const auto n_cells = static_cast<std::int64_t>(elevation.cell_count());
    std::mt19937_64 rng(spec.seed * 0x9e3779b97f4a7c15ULL + 1);

    // Ground truth classes.
    RasterGrid truth = RasterGrid::filled(elevation.rows, elevation.cols, 0.0);
    if (spec.truth_mode == TruthMode::LevelFill) {
        double level = spec.flood_level;
        if (spec.flood_quantile >= 0.0) {
            std::vector<double> sorted = elevation.values;
            std::sort(sorted.begin(), sorted.end());
            const auto idx = static_cast<std::size_t>(spec.flood_quantile * (sorted.size() - 1));
            level = sorted[idx];
        }
        std::int64_t flooded = 0;
        for (std::int64_t n = 0; n < n_cells; ++n) {
            truth.values[n] = elevation.values[n] <= level ? 1.0 : 0.0;
            flooded += truth.values[n] == 1.0;
        }
        if (flooded == 0 || flooded == n_cells)
            throw std::runtime_error("degenerate scene: flood level floods 0% or 100% of cells");
    } else {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (std::int32_t n : scene.tree.ascending_order) {
            if (scene.tree.is_leaf(n)) {
                truth.values[n] = uni(rng) < spec.planted_params.pi ? 1.0 : 0.0;
            } else {
                int v = 1;
                for (auto k : scene.tree.parents(n)) v &= truth.values[k] == 1.0;
                truth.values[n] = v && uni(rng) < spec.planted_params.rho ? 1.0 : 0.0;
            }
        }
    }

    // Feature bands from the planted per-class mixtures; unobserved cells get
    // nodata in every band.
    std::vector<std::uint8_t> mask(n_cells, 0);
    if (spec.pattern == ObservationPattern::Random) {
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (std::int64_t n = 0; n < n_cells; ++n) mask[n] = uni(rng) < spec.observe_fraction;
    } else {
        int width = std::max(1, static_cast<int>(std::lround(spec.observe_fraction * spec.cols)));
        width = std::min(width, spec.cols);
        std::uniform_int_distribution<int> start_dist(0, spec.cols - width);
        const int start = start_dist(rng);
        for (int r = 0; r < spec.rows; ++r)
            for (int c = start; c < start + width; ++c)
                mask[static_cast<std::int64_t>(r) * spec.cols + c] = 1;
    }

    const double nodata = -9999.0;
    std::vector<RasterGrid> bands(m, RasterGrid::filled(elevation.rows, elevation.cols, nodata));
    for (std::int64_t n = 0; n < n_cells; ++n) {
        if (!mask[n]) continue;
        const int cls = truth.values[n] == 1.0 ? 1 : 0;
        Eigen::VectorXd x = sample_mixture(spec.planted_params.class_models[cls], rng);
        for (int j = 0; j < m; ++j) bands[j].values[n] = x[j];
    }

    scene.stack = assemble_stack(std::move(elevation), std::move(bands), std::move(truth));

    scene.train.dim = m;
    for (int cls = 0; cls < 2; ++cls)
        for (int i = 0; i < spec.train_per_class; ++i) {
            scene.train.x.push_back(sample_mixture(spec.planted_params.class_models[cls], rng));
            scene.train.label.push_back(cls);
        }
    return scene;
}

namespace {

TerrainKind parse_terrain(const std::string& s) {
    if (s == "bowl") return TerrainKind::Bowl;
    if (s == "ridged") return TerrainKind::Ridged;
    if (s == "fractal") return TerrainKind::Fractal;
    throw std::runtime_error("unknown terrain: " + s);
}

const char* terrain_name(TerrainKind t) {
    switch (t) {
        case TerrainKind::Bowl: return "bowl";
        case TerrainKind::Ridged: return "ridged";
        default: return "fractal";
    }
}

}  // namespace

SceneSpec read_scene_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scene spec: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t");
            const auto e = s.find_last_not_of(" \t");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    SceneSpec spec;
    auto get = [&](const char* key, auto& out) {
        auto it = kv.find(key);
        if (it == kv.end()) return;
        std::istringstream ss(it->second);
        ss >> out;
    };
    get("rows", spec.rows);
    get("cols", spec.cols);
    if (kv.count("terrain")) spec.terrain = parse_terrain(kv["terrain"]);
    get("roughness", spec.roughness);
    get("flood_level", spec.flood_level);
    get("flood_quantile", spec.flood_quantile);
    if (kv.count("truth_mode"))
        spec.truth_mode = kv["truth_mode"] == "model_sample" ? TruthMode::ModelSample
                                                             : TruthMode::LevelFill;
    get("rho", spec.planted_params.rho);
    get("pi", spec.planted_params.pi);
    get("observe_fraction", spec.observe_fraction);
    if (kv.count("pattern"))
        spec.pattern = kv["pattern"] == "swath" ? ObservationPattern::Swath
                                                : ObservationPattern::Random;
    get("train_per_class", spec.train_per_class);
    get("seed", spec.seed);
    if (kv.count("flood_level") && !kv.count("flood_quantile")) spec.flood_quantile = -1.0;
    return spec;
}

void write_scene_spec(const SceneSpec& spec, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write scene spec: " + path);
    out << "rows = " << spec.rows << "\n";
    out << "cols = " << spec.cols << "\n";
    out << "terrain = " << terrain_name(spec.terrain) << "\n";
    out << "roughness = " << spec.roughness << "\n";
    out << "flood_level = " << spec.flood_level << "\n";
    out << "flood_quantile = " << spec.flood_quantile << "\n";
    out << "truth_mode = "
        << (spec.truth_mode == TruthMode::ModelSample ? "model_sample" : "level_fill") << "\n";
    out << "rho = " << std::setprecision(17) << spec.planted_params.rho << "\n";
    out << "pi = " << spec.planted_params.pi << "\n";
    out << "observe_fraction = " << spec.observe_fraction << "\n";
    out << "pattern = " << (spec.pattern == ObservationPattern::Swath ? "swath" : "random") << "\n";
    out << "train_per_class = " << spec.train_per_class << "\n";
    out << "seed = " << spec.seed << "\n";
}

JointTable enumerate_joint(const SplitTree& tree, const RasterStack& stack,
                           const ModelParams& params) {
    const std::int64_t n = tree.node_count;
    if (n > 12) throw std::runtime_error("enumeration oracle is limited to 12 nodes");
    JointTable table;
    table.node_count = static_cast<int>(n);
    const std::size_t n_assign = std::size_t{1} << n;
    table.log_prob.resize(n_assign);

    // Per-node log factors shared across assignments.
    std::vector<double> log_emis(2 * n, 0.0);
    for (std::int64_t i = 0; i < n; ++i) {
        if (!stack.observed[i]) continue;
        Eigen::VectorXd x = stack.feature_vector(i);
        log_emis[2 * i] = params.class_models[0].log_density(x);
        log_emis[2 * i + 1] = params.class_models[1].log_density(x);
    }
    const double lp[2][2] = {{0.0, std::log1p(-params.rho)},
                             {-std::numeric_limits<double>::infinity(), std::log(params.rho)}};
    const double lprior[2] = {std::log1p(-params.pi), std::log(params.pi)};

    for (std::size_t a = 0; a < n_assign; ++a) {
        double ll = 0.0;
        for (std::int64_t i = 0; i < n && std::isfinite(ll); ++i) {
            const int y = (a >> i) & 1;
            ll += log_emis[2 * i + y];
            if (tree.is_leaf(i)) {
                ll += lprior[y];
            } else {
                int v = 1;
                for (auto k : tree.parents(i)) v &= (a >> k) & 1;
                ll += lp[y][v];
            }
        }
        table.log_prob[a] = ll;
    }
    return table;
}

std::vector<double> JointTable::marginals() const {
    const std::int64_t n = node_count;
    double max_lp = *std::max_element(log_prob.begin(), log_prob.end());
    std::vector<double> marg(2 * n, 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < log_prob.size(); ++a) {
        const double w = std::exp(log_prob[a] - max_lp);
        total += w;
        for (std::int64_t i = 0; i < n; ++i) marg[2 * i + ((a >> i) & 1)] += w;
    }
    for (auto& v : marg) v /= total;
    return marg;
}

std::vector<double> JointTable::pair_marginals(const SplitTree& tree) const {
    const std::int64_t n = node_count;
    double max_lp = *std::max_element(log_prob.begin(), log_prob.end());
    std::vector<double> pair(4 * n, 0.0);
    double total = 0.0;
    for (std::size_t a = 0; a < log_prob.size(); ++a) {
        const double w = std::exp(log_prob[a] - max_lp);
        total += w;
        for (std::int64_t i = 0; i < n; ++i) {
            if (tree.is_leaf(i)) continue;
            const int y = (a >> i) & 1;
            int v = 1;
            for (auto k : tree.parents(i)) v &= (a >> k) & 1;
            pair[4 * i + 2 * y + v] += w;
        }
    }
    for (auto& v : pair) v /= total;
    return pair;
}

std::pair<std::vector<std::uint8_t>, double> JointTable::map_assignment() const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < log_prob.size(); ++a)
        if (log_prob[a] > log_prob[best]) best = a;
    std::vector<std::uint8_t> y(node_count, 0);
    for (int i = 0; i < node_count; ++i) y[i] = (best >> i) & 1;
    return {y, log_prob[best]};
}

SmallInstance random_small_instance(std::uint64_t seed, int max_mixture_size) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> dim_dist(2, 3);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    int rows = dim_dist(rng), cols = dim_dist(rng);
    if (rows * cols < 4) cols = 2;
    // occasionally stretch to reach larger node counts
    if (uni(rng) < 0.3) cols = 4;

    RasterGrid elev = RasterGrid::filled(rows, cols, 0.0);
    for (auto& v : elev.values) v = uni(rng) * 10.0;

    SmallInstance inst;
    inst.tree = build_split_tree(elev);

    const int m = 1 + (uni(rng) < 0.5 ? 1 : 0);
    std::uniform_int_distribution<int> k_dist(1, max_mixture_size);
    ModelParams params;
    params.rho = 0.5 + 0.499 * uni(rng);
    params.pi = 0.01 + 0.98 * uni(rng);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int c = 0; c < 2; ++c) {
        const int k = k_dist(rng);
        ClassMixture mix;
        mix.weights = Eigen::VectorXd::Zero(k);
        for (int i = 0; i < k; ++i) {
            GaussianComponent g;
            g.mean = Eigen::VectorXd::Zero(m);
            for (int j = 0; j < m; ++j) g.mean[j] = 4.0 * normal(rng) + (c ? 2.0 : 0.0);
            Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
            for (int r = 0; r < m; ++r)
                for (int s = 0; s < m; ++s) a(r, s) = normal(rng);
            g.cov = a * a.transpose() + 0.3 * Eigen::MatrixXd::Identity(m, m);
            g.finalize();
            mix.components.push_back(std::move(g));
            mix.weights[i] = 0.2 + uni(rng);
        }
        mix.weights /= mix.weights.sum();
        params.class_models[c] = std::move(mix);
    }
    inst.params = params;

    const auto n_cells = static_cast<std::int64_t>(elev.cell_count());
    std::vector<RasterGrid> bands(m, RasterGrid::filled(rows, cols, -9999.0));
    const double obs_frac = uni(rng);
    for (std::int64_t n = 0; n < n_cells; ++n) {
        if (uni(rng) >= obs_frac) continue;
        const int cls = uni(rng) < 0.5 ? 1 : 0;
        Eigen::VectorXd x = sample_mixture(params.class_models[cls], rng);
        for (int j = 0; j < m; ++j) bands[j].values[n] = x[j];
    }
    inst.stack = assemble_stack(std::move(elev), std::move(bands), std::nullopt);
    return inst;
}

}  // namespace floodtree
