#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace weightflow {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

// Uniform cell-centred grid over [x_min, x_max] x [y_min, y_max].
// Cell (i, j) has centre (x_min + (i + 1/2) dx, y_min + (j + 1/2) dy) and is
// stored at flat index i * ny + j.
class Grid2D {
public:
    static constexpr int kMinCells = 8;

    Grid2D(double x_min, double x_max, double y_min, double y_max, int nx, int ny);

    // Bounding box of `points` padded by `pad_fraction` of the span on each
    // side. A zero span along an axis is widened to one unit before padding.
    static Grid2D enclosing(std::span<const Vec2> points, int nx, int ny, double pad_fraction = 0.1);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    double y_min() const { return y_min_; }
    double y_max() const { return y_max_; }
    int nx() const { return nx_; }
    int ny() const { return ny_; }
    double dx() const { return dx_; }
    double dy() const { return dy_; }
    double cell_area() const { return dx_ * dy_; }
    double area() const { return (x_max_ - x_min_) * (y_max_ - y_min_); }
    std::size_t size() const { return static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_); }

    double x(int i) const { return x_min_ + (i + 0.5) * dx_; }
    double y(int j) const { return y_min_ + (j + 0.5) * dy_; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * ny_ + j; }

    bool contains(Vec2 p) const { return p.x >= x_min_ && p.x <= x_max_ && p.y >= y_min_ && p.y <= y_max_; }

    friend bool operator==(const Grid2D&, const Grid2D&) = default;

private:
    double x_min_, x_max_, y_min_, y_max_;
    int nx_, ny_;
    double dx_, dy_;
};

// Non-negative probability density per unit area on a Grid2D.
class Density {
public:
    Density(Grid2D grid, std::vector<double> values, double time = 0.0);

    // Samples `f` at cell centres, then normalizes.
    template <class F>
    static Density from_function(const Grid2D& grid, F&& f, double time = 0.0) {
        std::vector<double> v(grid.size());
        for (int i = 0; i < grid.nx(); ++i)
            for (int j = 0; j < grid.ny(); ++j) v[grid.index(i, j)] = f(grid.x(i), grid.y(j));
        Density d(grid, std::move(v), time);
        d.normalize();
        return d;
    }

    static Density uniform(const Grid2D& grid, double time = 0.0);

    // Discretized isotropic Gaussian N(mean, var I), normalized on the grid.
    static Density gaussian(const Grid2D& grid, Vec2 mean, double var, double time = 0.0);

    const Grid2D& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double time() const { return time_; }
    void set_time(double t) { time_ = t; }

    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }

    // Riemann sum of values * cell area.
    double mass() const;
    // Scales to unit mass. Throws DegenerateInput if the mass is zero.
    void normalize();

private:
    Grid2D grid_;
    std::vector<double> values_;
    double time_;
};

// Effective potential V = -log P in nats.
class PotentialField {
public:
    PotentialField(Grid2D grid, std::vector<double> values, double floor, double time = 0.0);

    const Grid2D& grid() const { return grid_; }
    const std::vector<double>& values() const { return values_; }
    double floor() const { return floor_; }
    double time() const { return time_; }

    double operator()(int i, int j) const { return values_[grid_.index(i, j)]; }

private:
    Grid2D grid_;
    std::vector<double> values_;
    double floor_;
    double time_;
};

// A 2-vector per grid cell, same flat layout as Density.
struct VectorField {
    Grid2D grid;
    std::vector<Vec2> values;
};

// The rows of one (m x 2) weight matrix, or any finite 2-D point set.
class PointCloud {
public:
    explicit PointCloud(std::vector<Vec2> points);

    std::span<const Vec2> points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    const Vec2& operator[](std::size_t k) const { return points_[k]; }

private:
    std::vector<Vec2> points_;
};

// Riemann sum of `values` times cell area.
double grid_integral(const Grid2D& grid, std::span<const double> values);

}  // namespace weightflow
