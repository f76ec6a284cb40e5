#include <cmath>
#include <numbers>
#include <vector>

#include "weightflow/kernels.hpp"
#include "upwind.hpp"
#include "weightflow/error.hpp"

namespace weightflow::kernels {

namespace {

// Per-point 1-D Gaussian factors evaluated at the cell centres of one axis.
void axis_factors(std::span<const Vec2> points, const Grid2D& grid, bool x_axis, double h, std::vector<double>& out) {
    const int n = static_cast<int>(points.size());
    const int cells = x_axis ? grid.nx() : grid.ny();
    out.assign(static_cast<std::size_t>(n) * cells, 0.0);
    const double inv_h = 1.0 / h;
#pragma omp parallel for schedule(static)
    for (int k = 0; k < n; ++k) {
        const double p = x_axis ? points[k].x : points[k].y;
        double* row = out.data() + static_cast<std::size_t>(k) * cells;
        for (int c = 0; c < cells; ++c) {
            const double u = ((x_axis ? grid.x(c) : grid.y(c)) - p) * inv_h;
            row[c] = std::exp(-0.5 * u * u);
        }
    }
}

struct FaceFluxes {
    const Grid2D& grid;
    std::span<const double> p;
    std::span<const Vec2> drift;
    std::span<const Vec2> sigma2;

    // Flux through the face between (i, j) and (i + 1, j); i in [0, nx - 2].
    double x_face(int i, int j) const {
        const std::size_t a = grid.index(i, j), b = grid.index(i + 1, j);
        const double u = 0.5 * (drift[a].x + drift[b].x);
        double adv;
        if (u > 0.0)
            adv = u * detail::van_leer_face(i > 0 ? p[grid.index(i - 1, j)] : p[a], p[a], p[b]);
        else
            adv = u * detail::van_leer_face(i + 2 < grid.nx() ? p[grid.index(i + 2, j)] : p[b], p[b], p[a]);
        const double dif = -0.5 * (sigma2[b].x * p[b] - sigma2[a].x * p[a]) / grid.dx();
        return adv + dif;
    }

    double y_face(int i, int j) const {
        const std::size_t a = grid.index(i, j), b = grid.index(i, j + 1);
        const double u = 0.5 * (drift[a].y + drift[b].y);
        double adv;
        if (u > 0.0)
            adv = u * detail::van_leer_face(j > 0 ? p[grid.index(i, j - 1)] : p[a], p[a], p[b]);
        else
            adv = u * detail::van_leer_face(j + 2 < grid.ny() ? p[grid.index(i, j + 2)] : p[b], p[b], p[a]);
        const double dif = -0.5 * (sigma2[b].y * p[b] - sigma2[a].y * p[a]) / grid.dy();
        return adv + dif;
    }
};

}  // namespace

void kde_sum(std::span<const Vec2> points, std::span<const double> weights, const Grid2D& grid, double hx,
             double hy, std::span<double> out) {
    if (!weights.empty() && weights.size() != points.size()) throw InvalidInput("kde weights size mismatch");
    const int n = static_cast<int>(points.size());
    const int nx = grid.nx(), ny = grid.ny();
    std::vector<double> kx, ky;
    axis_factors(points, grid, true, hx, kx);
    axis_factors(points, grid, false, hy, ky);
    const double norm = 1.0 / (2.0 * std::numbers::pi * hx * hy);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nx; ++i) {
        double* row = out.data() + grid.index(i, 0);
        for (int j = 0; j < ny; ++j) row[j] = 0.0;
        for (int k = 0; k < n; ++k) {
            const double w = weights.empty() ? 1.0 : weights[k];
            const double a = w * norm * kx[static_cast<std::size_t>(k) * nx + i];
            if (a == 0.0) continue;
            const double* yk = ky.data() + static_cast<std::size_t>(k) * ny;
            for (int j = 0; j < ny; ++j) row[j] += a * yk[j];
        }
    }
}

void nadaraya_watson(std::span<const Vec2> positions, std::span<const Vec2> updates, const Grid2D& grid, double h,
                     std::span<Vec2> numerator, std::span<double> denominator) {
    const int n = static_cast<int>(positions.size());
    const int nx = grid.nx(), ny = grid.ny();
    std::vector<double> kx, ky;
    axis_factors(positions, grid, true, h, kx);
    axis_factors(positions, grid, false, h, ky);
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            numerator[grid.index(i, j)] = Vec2{};
            denominator[grid.index(i, j)] = 0.0;
        }
        for (int k = 0; k < n; ++k) {
            const double a = kx[static_cast<std::size_t>(k) * nx + i];
            if (a == 0.0) continue;
            const double* yk = ky.data() + static_cast<std::size_t>(k) * ny;
            for (int j = 0; j < ny; ++j) {
                const double w = a * yk[j];
                const std::size_t c = grid.index(i, j);
                numerator[c].x += w * updates[k].x;
                numerator[c].y += w * updates[k].y;
                denominator[c] += w;
            }
        }
    }
}

void fp_step(const Grid2D& grid, std::span<const double> p, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, double dt, std::span<double> out) {
    const int nx = grid.nx(), ny = grid.ny();
    const FaceFluxes f{grid, p, drift, sigma2};
    const double rx = dt / grid.dx(), ry = dt / grid.dy();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nx; ++i) {
        for (int j = 0; j < ny; ++j) {
            const double east = i + 1 < nx ? f.x_face(i, j) : 0.0;
            const double west = i > 0 ? f.x_face(i - 1, j) : 0.0;
            const double north = j + 1 < ny ? f.y_face(i, j) : 0.0;
            const double south = j > 0 ? f.y_face(i, j - 1) : 0.0;
            const std::size_t c = grid.index(i, j);
            out[c] = p[c] - rx * (east - west) - ry * (north - south);
        }
    }
}

void kpz_rhs(const Grid2D& grid, std::span<const double> v, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, std::span<double> out) {
    const int nx = grid.nx(), ny = grid.ny();
    const double dx = grid.dx(), dy = grid.dy();
#pragma omp parallel for schedule(static)
    for (int i = 0; i < nx; ++i) {
        const int ie = i + 1 < nx ? i + 1 : i;
        const int iw = i > 0 ? i - 1 : i;
        for (int j = 0; j < ny; ++j) {
            const int jn = j + 1 < ny ? j + 1 : j;
            const int js = j > 0 ? j - 1 : j;
            const std::size_t c = grid.index(i, j);
            const std::size_t e = grid.index(ie, j), w = grid.index(iw, j);
            const std::size_t n = grid.index(i, jn), s = grid.index(i, js);

            const double gx = (v[e] - v[w]) / (2.0 * dx);
            const double gy = (v[n] - v[s]) / (2.0 * dy);

            // 1/2 d_a (s_a d_a V) in flux form; mirror ghosts make boundary fluxes vanish.
            const double fe = 0.5 * (sigma2[c].x + sigma2[e].x) * (v[e] - v[c]) / dx;
            const double fw = 0.5 * (sigma2[c].x + sigma2[w].x) * (v[c] - v[w]) / dx;
            const double fn = 0.5 * (sigma2[c].y + sigma2[n].y) * (v[n] - v[c]) / dy;
            const double fs = 0.5 * (sigma2[c].y + sigma2[s].y) * (v[c] - v[s]) / dy;
            const double diffusion = 0.5 * ((fe - fw) / dx + (fn - fs) / dy);

            const double quadratic = -0.5 * (sigma2[c].x * gx * gx + sigma2[c].y * gy * gy);

            const double dsx = (sigma2[e].x - sigma2[w].x) / (2.0 * dx);
            const double dsy = (sigma2[n].y - sigma2[s].y) / (2.0 * dy);
            const double cross = 0.5 * (dsx * gx + dsy * gy);

            const double d2s = (sigma2[e].x - 2.0 * sigma2[c].x + sigma2[w].x) / (dx * dx) +
                               (sigma2[n].y - 2.0 * sigma2[c].y + sigma2[s].y) / (dy * dy);

            // odd reflection of the normal drift component at the wall
            const double dxe = i + 1 < nx ? drift[e].x : -drift[c].x;
            const double dxw = i > 0 ? drift[w].x : -drift[c].x;
            const double dyn = j + 1 < ny ? drift[n].y : -drift[c].y;
            const double dys = j > 0 ? drift[s].y : -drift[c].y;
            const double div_d = (dxe - dxw) / (2.0 * dx) + (dyn - dys) / (2.0 * dy);

            const double advection = -(drift[c].x * gx + drift[c].y * gy);

            out[c] = diffusion + quadratic + cross - 0.5 * d2s + advection + div_d;
        }
    }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.rows) throw InvalidInput("gemm_nn: inner dimensions differ");
    if (c.rows != a.rows || c.cols != b.cols) c = Matrix(a.rows, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
#pragma omp parallel for schedule(static)
    for (int i = 0; i < m; ++i) {
        double* ci = c.data.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) ci[j] = 0.0;
        const double* ai = a.data.data() + static_cast<std::size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const double s = ai[p];
            if (s == 0.0) continue;
            const double* bp = b.data.data() + static_cast<std::size_t>(p) * n;
            for (int j = 0; j < n; ++j) ci[j] += s * bp[j];
        }
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.rows != b.rows) throw InvalidInput("gemm_tn: row counts differ");
    if (c.rows != a.cols || c.cols != b.cols) c = Matrix(a.cols, b.cols);
    const int m = a.rows, k = a.cols, n = b.cols;
#pragma omp parallel for schedule(static)
    for (int p = 0; p < k; ++p) {
        double* cp = c.data.data() + static_cast<std::size_t>(p) * n;
        for (int j = 0; j < n; ++j) cp[j] = 0.0;
        for (int i = 0; i < m; ++i) {
            const double s = a.data[static_cast<std::size_t>(i) * k + p];
            if (s == 0.0) continue;
            const double* bi = b.data.data() + static_cast<std::size_t>(i) * n;
            for (int j = 0; j < n; ++j) cp[j] += s * bi[j];
        }
    }
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
    if (a.cols != b.cols) throw InvalidInput("gemm_nt: column counts differ");
    Matrix bt(b.cols, b.rows);
    for (int r = 0; r < b.rows; ++r)
        for (int q = 0; q < b.cols; ++q) bt(q, r) = b(r, q);
    gemm_nn(a, bt, c);
}

}  // namespace weightflow::kernels
