#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace floodtree {

// Regular grid of scalars, row-major, north row first.
// Cells are indexed by n = row * cols + col throughout the project.
struct RasterGrid {
    int rows = 0;
    int cols = 0;
    double cell_size = 1.0;
    double xllcorner = 0.0;
    double yllcorner = 0.0;
    double nodata_value = -9999.0;
    std::vector<double> values;

    std::size_t cell_count() const { return static_cast<std::size_t>(rows) * cols; }
    double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols + c]; }
    double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols + c]; }
    bool is_nodata(std::size_t n) const { return values[n] == nodata_value; }

    static RasterGrid filled(int rows, int cols, double value);
};

// Aligned grids: elevation (fully observed), m feature bands with an
// observation mask, and optional {0,1} ground-truth classes.
struct RasterStack {
    RasterGrid elevation;
    std::vector<RasterGrid> features;
    std::vector<std::uint8_t> observed;   // per cell: 1 iff all bands present
    std::optional<RasterGrid> truth;
    int rows = 0;
    int cols = 0;
    int band_count = 0;

    std::size_t cell_count() const { return static_cast<std::size_t>(rows) * cols; }
    std::size_t observed_count() const;
    Eigen::VectorXd feature_vector(std::size_t n) const;
};

// Labeled samples from outside the raster framework.
struct TrainingSet {
    int dim = 0;
    std::vector<Eigen::VectorXd> x;
    std::vector<int> label;   // 0 or 1

    std::size_t size() const { return x.size(); }
    std::vector<Eigen::VectorXd> class_samples(int cls) const;
};

RasterGrid read_ascii_grid(const std::string& path);
void write_ascii_grid(const RasterGrid& grid, const std::string& path);

RasterStack assemble_stack(RasterGrid elevation, std::vector<RasterGrid> features,
                           std::optional<RasterGrid> truth = std::nullopt);

TrainingSet read_training_csv(const std::string& path, int m, bool has_header = false);
void write_training_csv(const TrainingSet& train, const std::string& path);

// Integer class grids round-trip bit-exactly through the ASCII format.
void write_class_grid(const RasterGrid& grid, const std::string& path);

}  // namespace floodtree
