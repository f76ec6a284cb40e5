#pragma once

#include <span>

#include "weightflow/grid.hpp"

namespace weightflow {

struct Bandwidth {
    double hx = 0.0;
    double hy = 0.0;
};

// Scott's rule per axis, h = sigma_hat * n^(-1/6). An axis with zero spread
// (single point, collinear cloud) falls back to `fallback`.
Bandwidth scott_bandwidth(const PointCloud& points, Bandwidth fallback);

// Gaussian product-kernel KDE evaluated at cell centres and normalized to
// unit mass on `grid`.
Density kde_estimate(const PointCloud& points, const Grid2D& grid, Bandwidth bw);

// Weighted variant: kernel k is scaled by weights[k] (non-negative, not all zero).
Density kde_estimate(const PointCloud& points, std::span<const double> weights, const Grid2D& grid, Bandwidth bw);

}  // namespace weightflow
