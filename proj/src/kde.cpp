#include "weightflow/kde.hpp"

#include <cmath>
#include <vector>

#include "weightflow/error.hpp"
#include "weightflow/kernels.hpp"

namespace weightflow {

Bandwidth scott_bandwidth(const PointCloud& points, Bandwidth fallback) {
    const auto n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const auto& p : points.points()) {
        mx += p.x;
        my += p.y;
    }
    mx /= n;
    my /= n;
    double vx = 0.0, vy = 0.0;
    for (const auto& p : points.points()) {
        vx += (p.x - mx) * (p.x - mx);
        vy += (p.y - my) * (p.y - my);
    }
    const double denom = points.size() > 1 ? n - 1.0 : 1.0;
    const double factor = std::pow(n, -1.0 / 6.0);
    Bandwidth bw{std::sqrt(vx / denom) * factor, std::sqrt(vy / denom) * factor};
    if (!(bw.hx > 0.0)) bw.hx = fallback.hx;
    if (!(bw.hy > 0.0)) bw.hy = fallback.hy;
    return bw;
}

Density kde_estimate(const PointCloud& points, const Grid2D& grid, Bandwidth bw) {
    return kde_estimate(points, {}, grid, bw);
}

Density kde_estimate(const PointCloud& points, std::span<const double> weights, const Grid2D& grid, Bandwidth bw) {
    if (!(bw.hx > 0.0) || !(bw.hy > 0.0) || !std::isfinite(bw.hx) || !std::isfinite(bw.hy))
        throw InvalidInput("kde bandwidths must be positive and finite");
    if (!weights.empty()) {
        if (weights.size() != points.size()) throw InvalidInput("kde weights size mismatch");
        for (double w : weights)
            if (!std::isfinite(w) || w < 0.0) throw InvalidInput("kde weights must be finite and non-negative");
    }
    std::vector<double> raw(grid.size());
    kernels::kde_sum(points.points(), weights, grid, bw.hx, bw.hy, raw);
    Density d(grid, std::move(raw));
    d.normalize();
    return d;
}

}  // namespace weightflow
