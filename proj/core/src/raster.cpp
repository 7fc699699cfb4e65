#include "floodtree/raster.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace floodtree {

RasterGrid RasterGrid::filled(int rows, int cols, double value) {
    RasterGrid g;
    g.rows = rows;
    g.cols = cols;
    g.values.assign(static_cast<std::size_t>(rows) * cols, value);
    return g;
}

std::size_t RasterStack::observed_count() const {
    std::size_t k = 0;
    for (auto o : observed) k += o;
    return k;
}

Eigen::VectorXd RasterStack::feature_vector(std::size_t n) const {
    Eigen::VectorXd x(band_count);
    for (int j = 0; j < band_count; ++j) x[j] = features[j].values[n];
    return x;
}

std::vector<Eigen::VectorXd> TrainingSet::class_samples(int cls) const {
    std::vector<Eigen::VectorXd> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (label[i] == cls) out.push_back(x[i]);
    return out;
}

namespace {

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// 6 significant digits for fractional values, exact text for integers.
std::string format_value(double v) {
    char buf[64];
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.0f", v);
    } else {
        std::snprintf(buf, sizeof buf, "%.6g", v);
    }
    return buf;
}

}  // namespace

RasterGrid read_ascii_grid(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open raster file: " + path);

    std::map<std::string, double> header;
    std::string key;
    // Header lines are "key value"; the first non-keyword token starts the data.
    static const char* required[] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize"};
    double first_value = 0.0;
    bool have_first_value = false;
    while (in >> key) {
        std::string k = lower(key);
        bool is_header_key = k == "ncols" || k == "nrows" || k == "xllcorner" ||
                             k == "yllcorner" || k == "cellsize" || k == "nodata_value";
        if (!is_header_key) {
            try {
                first_value = std::stod(key);
            } catch (const std::exception&) {
                throw std::runtime_error("malformed header token '" + key + "' in " + path);
            }
            have_first_value = true;
            break;
        }
        double v;
        if (!(in >> v)) throw std::runtime_error("missing value for header key '" + key + "' in " + path);
        header[k] = v;
    }
    for (const char* r : required)
        if (!header.count(r))
            throw std::runtime_error(std::string("missing header key '") + r + "' in " + path);

    RasterGrid g;
    g.cols = static_cast<int>(header["ncols"]);
    g.rows = static_cast<int>(header["nrows"]);
    g.xllcorner = header["xllcorner"];
    g.yllcorner = header["yllcorner"];
    g.cell_size = header["cellsize"];
    g.nodata_value = header.count("nodata_value") ? header["nodata_value"] : -9999.0;
    if (g.rows < 1 || g.cols < 1)
        throw std::runtime_error("invalid dimensions in " + path);

    g.values.reserve(g.cell_count());
    if (have_first_value) g.values.push_back(first_value);
    double v;
    while (in >> v) g.values.push_back(v);
    if (g.values.size() != g.cell_count()) {
        std::ostringstream os;
        os << "value count mismatch in " << path << ": expected " << g.cell_count()
           << " got " << g.values.size();
        throw std::runtime_error(os.str());
    }
    return g;
}

void write_ascii_grid(const RasterGrid& grid, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write raster file: " + path);
    out << "ncols " << grid.cols << "\n";
    out << "nrows " << grid.rows << "\n";
    out << "xllcorner " << format_value(grid.xllcorner) << "\n";
    out << "yllcorner " << format_value(grid.yllcorner) << "\n";
    out << "cellsize " << format_value(grid.cell_size) << "\n";
    out << "NODATA_value " << format_value(grid.nodata_value) << "\n";
    for (int r = 0; r < grid.rows; ++r) {
        for (int c = 0; c < grid.cols; ++c) {
            if (c) out << ' ';
            out << format_value(grid.at(r, c));
        }
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

RasterStack assemble_stack(RasterGrid elevation, std::vector<RasterGrid> features,
                           std::optional<RasterGrid> truth) {
    if (features.empty()) throw std::runtime_error("at least one feature band is required");
    const int rows = elevation.rows, cols = elevation.cols;
    for (const auto& f : features)
        if (f.rows != rows || f.cols != cols)
            throw std::runtime_error("feature band dimensions do not match elevation");
    if (truth && (truth->rows != rows || truth->cols != cols))
        throw std::runtime_error("truth grid dimensions do not match elevation");
    for (std::size_t n = 0; n < elevation.cell_count(); ++n)
        if (elevation.is_nodata(n))
            throw std::runtime_error("elevation grid contains nodata cells");

    RasterStack s;
    s.rows = rows;
    s.cols = cols;
    s.band_count = static_cast<int>(features.size());
    s.elevation = std::move(elevation);
    s.features = std::move(features);
    s.truth = std::move(truth);
    s.observed.assign(s.cell_count(), 1);
    for (const auto& f : s.features)
        for (std::size_t n = 0; n < s.cell_count(); ++n)
            if (f.is_nodata(n)) s.observed[n] = 0;
    return s;
}

TrainingSet read_training_csv(const std::string& path, int m, bool has_header) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open training file: " + path);
    TrainingSet t;
    t.dim = m;
    std::string line;
    int row = 0;
    bool seen[2] = {false, false};
    while (std::getline(in, line)) {
        ++row;
        if (row == 1 && has_header) continue;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (static_cast<int>(fields.size()) != m + 1) {
            std::ostringstream os;
            os << "row " << row << ": expected " << m + 1 << " columns, got " << fields.size();
            throw std::runtime_error(os.str());
        }
        Eigen::VectorXd x(m);
        for (int j = 0; j < m; ++j) {
            x[j] = std::stod(fields[j]);
            if (!std::isfinite(x[j]))
                throw std::runtime_error("row " + std::to_string(row) + ": non-finite feature");
        }
        const std::string& ls = fields[m];
        if (ls != "0" && ls != "1")
            throw std::runtime_error("row " + std::to_string(row) + ": label must be 0 or 1, got '" + ls + "'");
        int lab = ls == "1" ? 1 : 0;
        seen[lab] = true;
        t.x.push_back(std::move(x));
        t.label.push_back(lab);
    }
    if (t.x.empty()) throw std::runtime_error("empty training set: " + path);
    if (!seen[0] || !seen[1]) throw std::runtime_error("training set must contain both classes");
    return t;
}

void write_training_csv(const TrainingSet& train, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training file: " + path);
    char buf[64];
    for (std::size_t i = 0; i < train.size(); ++i) {
        for (int j = 0; j < train.dim; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", train.x[i][j]);
            out << buf << ',';
        }
        out << train.label[i] << '\n';
    }
}

void write_class_grid(const RasterGrid& grid, const std::string& path) {
    write_ascii_grid(grid, path);
}

}  // namespace floodtree
