#include "weightflow/potential.hpp"

#include <algorithm>
#include <cmath>

#include "weightflow/error.hpp"

namespace weightflow {

double default_floor(const Grid2D& grid) { return 1e-12 / grid.area(); }

PotentialField potential_from_density(const Density& d, double floor) {
    if (!(floor > 0.0) || !std::isfinite(floor)) throw InvalidInput("potential floor must be positive");
    std::vector<double> v(d.values().size());
    std::transform(d.values().begin(), d.values().end(), v.begin(),
                   [floor](double p) { return -std::log(std::max(p, floor)); });
    return PotentialField(d.grid(), std::move(v), floor, d.time());
}

Density density_from_potential(const PotentialField& v) {
    const auto& vals = v.values();
    // shift by min V so the largest exponent is zero
    const double vmin = *std::min_element(vals.begin(), vals.end());
    std::vector<double> p(vals.size());
    std::transform(vals.begin(), vals.end(), p.begin(), [vmin](double x) { return std::exp(-(x - vmin)); });
    Density d(v.grid(), std::move(p), v.time());
    d.normalize();
    return d;
}

namespace {

// d/dx of f along one axis at index k of n samples with spacing h.
template <class F>
double axis_derivative(F&& f, int k, int n, double h) {
    if (k == 0) return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    if (k == n - 1) return (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
    return (f(k + 1) - f(k - 1)) / (2.0 * h);
}

}  // namespace

VectorField score_field(const PotentialField& v) {
    const Grid2D& g = v.grid();
    VectorField out{g, std::vector<Vec2>(g.size())};
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.ny(); ++j) {
            const double gx = axis_derivative([&](int a) { return v(a, j); }, i, g.nx(), g.dx());
            const double gy = axis_derivative([&](int b) { return v(i, b); }, j, g.ny(), g.dy());
            out.values[g.index(i, j)] = Vec2{-gx, -gy};
        }
    }
    return out;
}

}  // namespace weightflow
