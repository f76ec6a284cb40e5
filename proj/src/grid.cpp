#include "weightflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "weightflow/error.hpp"

namespace weightflow {

Grid2D::Grid2D(double x_min, double x_max, double y_min, double y_max, int nx, int ny)
    : x_min_(x_min), x_max_(x_max), y_min_(y_min), y_max_(y_max), nx_(nx), ny_(ny) {
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(y_min) || !std::isfinite(y_max))
        throw InvalidInput("grid bounds must be finite");
    if (!(x_min < x_max) || !(y_min < y_max)) throw InvalidInput("grid requires x_min < x_max and y_min < y_max");
    if (nx < kMinCells || ny < kMinCells)
        throw InvalidInput("grid needs at least " + std::to_string(kMinCells) + " cells per axis");
    dx_ = (x_max - x_min) / nx;
    dy_ = (y_max - y_min) / ny;
}

Grid2D Grid2D::enclosing(std::span<const Vec2> points, int nx, int ny, double pad_fraction) {
    if (points.empty()) throw InvalidInput("cannot size a grid from an empty point set");
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0;
    double y0 = x0, y1 = -x0;
    for (const auto& p : points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("non-finite point");
        x0 = std::min(x0, p.x);
        x1 = std::max(x1, p.x);
        y0 = std::min(y0, p.y);
        y1 = std::max(y1, p.y);
    }
    auto widen = [](double& lo, double& hi) {
        if (hi - lo <= 0.0) {
            lo -= 0.5;
            hi += 0.5;
        }
    };
    widen(x0, x1);
    widen(y0, y1);
    const double px = pad_fraction * (x1 - x0);
    const double py = pad_fraction * (y1 - y0);
    return Grid2D(x0 - px, x1 + px, y0 - py, y1 + py, nx, ny);
}

double grid_integral(const Grid2D& grid, std::span<const double> values) {
    double s = 0.0;
    for (double v : values) s += v;
    return s * grid.cell_area();
}

Density::Density(Grid2D grid, std::vector<double> values, double time)
    : grid_(grid), values_(std::move(values)), time_(time) {
    if (values_.size() != grid_.size()) throw InvalidInput("density size does not match grid");
    for (double v : values_)
        if (!std::isfinite(v) || v < 0.0) throw InvalidInput("density values must be finite and non-negative");
}

Density Density::uniform(const Grid2D& grid, double time) {
    return Density(grid, std::vector<double>(grid.size(), 1.0 / grid.area()), time);
}

Density Density::gaussian(const Grid2D& grid, Vec2 mean, double var, double time) {
    if (!(var > 0.0)) throw InvalidInput("gaussian variance must be positive");
    return from_function(
        grid,
        [&](double x, double y) {
            const double r2 = (x - mean.x) * (x - mean.x) + (y - mean.y) * (y - mean.y);
            return std::exp(-0.5 * r2 / var);
        },
        time);
}

double Density::mass() const { return grid_integral(grid_, values_); }

void Density::normalize() {
    const double m = mass();
    if (!(m > 0.0)) throw DegenerateInput("cannot normalize a density with zero mass");
    const double inv = 1.0 / m;
    for (double& v : values_) v *= inv;
}

PotentialField::PotentialField(Grid2D grid, std::vector<double> values, double floor, double time)
    : grid_(grid), values_(std::move(values)), floor_(floor), time_(time) {
    if (values_.size() != grid_.size()) throw InvalidInput("potential size does not match grid");
    for (double v : values_)
        if (!std::isfinite(v)) throw InvalidInput("potential values must be finite");
}

PointCloud::PointCloud(std::vector<Vec2> points) : points_(std::move(points)) {
    if (points_.empty()) throw InvalidInput("point cloud is empty");
    for (const auto& p : points_)
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw InvalidInput("point cloud has a non-finite coordinate");
}

}  // namespace weightflow
