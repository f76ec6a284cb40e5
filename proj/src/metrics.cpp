#include "weightflow/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "weightflow/error.hpp"

namespace weightflow {

namespace {

void require_same_grid(const Density& a, const Density& b) {
    if (!(a.grid() == b.grid())) throw InvalidInput("metric inputs live on different grids");
}

}  // namespace

double grid_mse(const Density& a, const Density& b) {
    require_same_grid(a, b);
    const auto& x = a.values();
    const auto& y = b.values();
    double s = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) s += (y[k] - x[k]) * (y[k] - x[k]);
    return s / static_cast<double>(x.size());
}

double grid_pearson(const Density& a, const Density& b) {
    require_same_grid(a, b);
    const auto& x = a.values();
    const auto& y = b.values();
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        const double u = x[k] - mx, v = y[k] - my;
        sxy += u * v;
        sxx += u * u;
        syy += v * v;
    }
    auto constant = [](const std::vector<double>& v) {
        const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
        return *lo == *hi;
    };
    if (constant(x) || constant(y) || sxx == 0.0 || syy == 0.0) throw DegenerateInput("pearson correlation undefined for a constant field");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

}  // namespace weightflow
