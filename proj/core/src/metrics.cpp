#include "floodtree/metrics.hpp"

#include <cstdio>
#include <stdexcept>

namespace floodtree {

MetricsReport score(const RasterGrid& pred, const RasterGrid& truth) {
    if (pred.rows != truth.rows || pred.cols != truth.cols)
        throw std::runtime_error("prediction and truth grids are not aligned");
    MetricsReport rep;
    std::int64_t evaluable = 0;
    for (std::size_t n = 0; n < truth.cell_count(); ++n) {
        if (truth.is_nodata(n)) continue;
        const int t = truth.values[n] == 1.0 ? 1 : 0;
        const int p = pred.values[n] == 1.0 ? 1 : 0;
        ++rep.confusion[t][p];
        ++evaluable;
    }
    if (evaluable == 0) throw std::runtime_error("no evaluable cells (truth all nodata)");

    for (int c = 0; c < 2; ++c) {
        const double tp = static_cast<double>(rep.confusion[c][c]);
        const double fp = static_cast<double>(rep.confusion[1 - c][c]);
        const double fn = static_cast<double>(rep.confusion[c][1 - c]);
        auto& m = rep.per_class[c];
        m.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
        m.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        m.f_score = m.precision + m.recall > 0
                        ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
                        : 0.0;
    }
    rep.average_f = (rep.per_class[0].f_score + rep.per_class[1].f_score) / 2.0;
    return rep;
}

std::string MetricsReport::table() const {
    char buf[512];
    std::string out = "class  precision  recall     F          avg_F\n";
    static const char* names[2] = {"dry  ", "flood"};
    for (int c = 0; c < 2; ++c) {
        std::snprintf(buf, sizeof buf, "%s  %-9.4f  %-9.4f  %-9.4f", names[c],
                      per_class[c].precision, per_class[c].recall, per_class[c].f_score);
        out += buf;
        if (c == 0) {
            std::snprintf(buf, sizeof buf, "  %-9.4f", average_f);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

std::string MetricsReport::csv() const {
    char buf[512];
    std::string out = "class,precision,recall,f,avg_f\n";
    for (int c = 0; c < 2; ++c) {
        std::snprintf(buf, sizeof buf, "%d,%.6f,%.6f,%.6f,%.6f\n", c, per_class[c].precision,
                      per_class[c].recall, per_class[c].f_score, average_f);
        out += buf;
    }
    return out;
}

}  // namespace floodtree
