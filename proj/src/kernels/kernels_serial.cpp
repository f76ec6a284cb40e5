#include <cmath>
#include <numbers>
#include <vector>

#include "weightflow/error.hpp"
#include "weightflow/kernels.hpp"
#include "upwind.hpp"

namespace weightflow::kernels::serial {

void kde_sum(std::span<const Vec2> points, std::span<const double> weights, const Grid2D& grid, double hx,
             double hy, std::span<double> out) {
    if (!weights.empty() && weights.size() != points.size()) throw InvalidInput("kde weights size mismatch");
    const double norm = 1.0 / (2.0 * std::numbers::pi * hx * hy);
    for (int i = 0; i < grid.nx(); ++i) {
        for (int j = 0; j < grid.ny(); ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < points.size(); ++k) {
                const double u = (grid.x(i) - points[k].x) / hx;
                const double v = (grid.y(j) - points[k].y) / hy;
                const double w = weights.empty() ? 1.0 : weights[k];
                acc += w * norm * std::exp(-0.5 * (u * u + v * v));
            }
            out[grid.index(i, j)] = acc;
        }
    }
}

void nadaraya_watson(std::span<const Vec2> positions, std::span<const Vec2> updates, const Grid2D& grid, double h,
                     std::span<Vec2> numerator, std::span<double> denominator) {
    for (int i = 0; i < grid.nx(); ++i) {
        for (int j = 0; j < grid.ny(); ++j) {
            Vec2 num{};
            double den = 0.0;
            for (std::size_t k = 0; k < positions.size(); ++k) {
                const double ddx = grid.x(i) - positions[k].x;
                const double ddy = grid.y(j) - positions[k].y;
                const double w = std::exp(-0.5 * (ddx * ddx + ddy * ddy) / (h * h));
                num.x += w * updates[k].x;
                num.y += w * updates[k].y;
                den += w;
            }
            numerator[grid.index(i, j)] = num;
            denominator[grid.index(i, j)] = den;
        }
    }
}

void fp_step(const Grid2D& grid, std::span<const double> p, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, double dt, std::span<double> out) {
    const int nx = grid.nx(), ny = grid.ny();
    // fx[i][j]: flux through the east face of cell (i, j); last column stays zero (wall).
    std::vector<double> fx(grid.size(), 0.0), fy(grid.size(), 0.0);
    for (int i = 0; i + 1 < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const std::size_t a = grid.index(i, j), b = grid.index(i + 1, j);
            const double u = 0.5 * (drift[a].x + drift[b].x);
            const double back = u > 0.0 ? (i > 0 ? p[grid.index(i - 1, j)] : p[a])
                                        : (i + 2 < nx ? p[grid.index(i + 2, j)] : p[b]);
            const double adv = u > 0.0 ? u * detail::van_leer_face(back, p[a], p[b])
                                       : u * detail::van_leer_face(back, p[b], p[a]);
            fx[a] = adv + -0.5 * (sigma2[b].x * p[b] - sigma2[a].x * p[a]) / grid.dx();
        }
    }
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j + 1 < ny; ++j) {
            const std::size_t a = grid.index(i, j), b = grid.index(i, j + 1);
            const double u = 0.5 * (drift[a].y + drift[b].y);
            const double back = u > 0.0 ? (j > 0 ? p[grid.index(i, j - 1)] : p[a])
                                        : (j + 2 < ny ? p[grid.index(i, j + 2)] : p[b]);
            const double adv = u > 0.0 ? u * detail::van_leer_face(back, p[a], p[b])
                                       : u * detail::van_leer_face(back, p[b], p[a]);
            fy[a] = adv + -0.5 * (sigma2[b].y * p[b] - sigma2[a].y * p[a]) / grid.dy();
        }
    }
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const std::size_t c = grid.index(i, j);
            const double west = i > 0 ? fx[grid.index(i - 1, j)] : 0.0;
            const double south = j > 0 ? fy[grid.index(i, j - 1)] : 0.0;
            out[c] = p[c] - dt / grid.dx() * (fx[c] - west) - dt / grid.dy() * (fy[c] - south);
        }
    }
}

void kpz_rhs(const Grid2D& grid, std::span<const double> v, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, std::span<double> out) {
    const int nx = grid.nx(), ny = grid.ny();
    const double dx = grid.dx(), dy = grid.dy();
    auto V = [&](int i, int j) {
        i = i < 0 ? 0 : (i >= nx ? nx - 1 : i);
        j = j < 0 ? 0 : (j >= ny ? ny - 1 : j);
        return v[grid.index(i, j)];
    };
    auto S = [&](int i, int j) {
        i = i < 0 ? 0 : (i >= nx ? nx - 1 : i);
        j = j < 0 ? 0 : (j >= ny ? ny - 1 : j);
        return sigma2[grid.index(i, j)];
    };
    auto Dx = [&](int i, int j) {
        if (i < 0 || i >= nx) return -drift[grid.index(i < 0 ? 0 : nx - 1, j)].x;
        return drift[grid.index(i, j)].x;
    };
    auto Dy = [&](int i, int j) {
        if (j < 0 || j >= ny) return -drift[grid.index(i, j < 0 ? 0 : ny - 1)].y;
        return drift[grid.index(i, j)].y;
    };
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double gx = (V(i + 1, j) - V(i - 1, j)) / (2.0 * dx);
            const double gy = (V(i, j + 1) - V(i, j - 1)) / (2.0 * dy);
            const double sx = S(i, j).x, sy = S(i, j).y;

            const double lap_x = (0.5 * (sx + S(i + 1, j).x) * (V(i + 1, j) - V(i, j)) -
                                  0.5 * (sx + S(i - 1, j).x) * (V(i, j) - V(i - 1, j))) /
                                 (dx * dx);
            const double lap_y = (0.5 * (sy + S(i, j + 1).y) * (V(i, j + 1) - V(i, j)) -
                                  0.5 * (sy + S(i, j - 1).y) * (V(i, j) - V(i, j - 1))) /
                                 (dy * dy);

            const double dsx = (S(i + 1, j).x - S(i - 1, j).x) / (2.0 * dx);
            const double dsy = (S(i, j + 1).y - S(i, j - 1).y) / (2.0 * dy);
            const double d2s = (S(i + 1, j).x - 2.0 * sx + S(i - 1, j).x) / (dx * dx) +
                               (S(i, j + 1).y - 2.0 * sy + S(i, j - 1).y) / (dy * dy);
            const double div_d = (Dx(i + 1, j) - Dx(i - 1, j)) / (2.0 * dx) + (Dy(i, j + 1) - Dy(i, j - 1)) / (2.0 * dy);
            const Vec2 d = drift[grid.index(i, j)];

            out[grid.index(i, j)] = 0.5 * (lap_x + lap_y) - 0.5 * (sx * gx * gx + sy * gy * gy) +
                                    0.5 * (dsx * gx + dsy * gy) - 0.5 * d2s - (d.x * gx + d.y * gy) + div_d;
        }
    }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.rows) throw InvalidInput("gemm_nn: inner dimensions differ");
    c = Matrix(a.rows, b.cols);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int p = 0; p < a.cols; ++p) s += a(i, p) * b(p, j);
            c(i, j) = s;
        }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows != b.rows) throw InvalidInput("gemm_tn: row counts differ");
    c = Matrix(a.cols, b.cols);
    for (int p = 0; p < a.cols; ++p)
        for (int j = 0; j < b.cols; ++j) {
            double s = 0.0;
            for (int i = 0; i < a.rows; ++i) s += a(i, p) * b(i, j);
            c(p, j) = s;
        }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.cols) throw InvalidInput("gemm_nt: column counts differ");
    c = Matrix(a.rows, b.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < b.rows; ++j) {
            double s = 0.0;
            for (int p = 0; p < a.cols; ++p) s += a(i, p) * b(j, p);
            c(i, j) = s;
        }
}

}  // namespace weightflow::kernels::serial
