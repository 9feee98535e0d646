#include "wildfire/smote.hpp"

#include <algorithm>

#include "wildfire/error.hpp"
#include "wildfire/seed.hpp"

namespace wildfire {

SmoteResult smote(const Dataset& rows, const SmoteConfig& cfg) {
    if (cfg.k_neighbors < 1) throw Error(ErrorKind::Contract, "SMOTE k_neighbors must be at least 1");
    const auto labels = class_labels(rows.y);
    if (labels.size() != 2) {
        throw Error(ErrorKind::Contract,
                    "SMOTE needs exactly two classes, found " + std::to_string(labels.size()));
    }
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < rows.size(); ++i) by_class[rows.y[i] == labels[1] ? 1 : 0].push_back(i);

    SmoteResult out;
    out.n_original = rows.size();
    const int minority_slot = by_class[0].size() <= by_class[1].size() ? 0 : 1;
    const auto& minority = by_class[minority_slot];
    const std::size_t deficit = by_class[1 - minority_slot].size() - minority.size();
    if (deficit == 0) {
        out.rows = rows;
        return out;
    }

    // Neighbor lists among minority rows only, so majority rows never
    // influence the synthetic points.
    const std::size_t m = minority.size();
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(cfg.k_neighbors), m > 1 ? m - 1 : 0);
    std::vector<std::vector<std::size_t>> neighbors(m);
    std::vector<std::pair<double, std::size_t>> dist;
    for (std::size_t a = 0; a < m && k > 0; ++a) {
        dist.clear();
        const auto xa = rows.x.row(static_cast<Eigen::Index>(minority[a]));
        for (std::size_t b = 0; b < m; ++b) {
            if (b == a) continue;
            const double d = (rows.x.row(static_cast<Eigen::Index>(minority[b])) - xa).squaredNorm();
            dist.emplace_back(d, minority[b]);
        }
        std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
        for (std::size_t j = 0; j < k; ++j) neighbors[a].push_back(dist[j].second);
    }

    const auto d = rows.x.cols();
    out.rows.x.resize(static_cast<Eigen::Index>(rows.size() + deficit), d);
    out.rows.x.topRows(static_cast<Eigen::Index>(rows.size())) = rows.x;
    out.rows.y = rows.y;
    out.rows.y.reserve(rows.size() + deficit);
    out.parents.reserve(deficit);

    Rng rng(cfg.seed);
    const int minority_label = labels[static_cast<std::size_t>(minority_slot)];
    for (std::size_t s = 0; s < deficit; ++s) {
        const std::size_t a = s % m;
        const std::size_t base = minority[a];
        const auto target = static_cast<Eigen::Index>(rows.size() + s);
        if (k == 0) {
            out.rows.x.row(target) = rows.x.row(static_cast<Eigen::Index>(base));
            out.parents.emplace_back(base, base);
        } else {
            const std::size_t nn = neighbors[a][uniform_index(rng, k)];
            const double lambda = uniform01(rng);
            const auto xb = rows.x.row(static_cast<Eigen::Index>(base));
            const auto xn = rows.x.row(static_cast<Eigen::Index>(nn));
            // Clamping removes rounding overshoot past the parent box.
            out.rows.x.row(target) =
                (xb + lambda * (xn - xb)).cwiseMax(xb.cwiseMin(xn)).cwiseMin(xb.cwiseMax(xn));
            out.parents.emplace_back(base, nn);
        }
        out.rows.y.push_back(minority_label);
    }
    return out;
}

}  // namespace wildfire
