#pragma once

#include "floodtree/raster.hpp"

#include <array>
#include <cstdint>
#include <string>

namespace floodtree {

struct ClassMetrics {
    double precision = 0.0;
    double recall = 0.0;
    double f_score = 0.0;
};

struct MetricsReport {
    std::array<ClassMetrics, 2> per_class;
    double average_f = 0.0;                         // unweighted mean over the two classes
    std::array<std::array<std::int64_t, 2>, 2> confusion{};   // [truth][pred]

    std::string table() const;
    std::string csv() const;
};

// Cells where truth is nodata are excluded.
MetricsReport score(const RasterGrid& pred, const RasterGrid& truth);

}  // namespace floodtree
