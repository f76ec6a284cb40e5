#pragma once

// Hot loops of the library. The functions in `kernels` are OpenMP-parallel
// over grid columns or matrix rows; each output element is written by one
// thread with a fixed summation order, so results do not depend on the thread
// count. `kernels::serial` holds plain single-threaded reference versions kept
// for tests and benchmarks.

#include <span>

#include "weightflow/grid.hpp"
#include "weightflow/matrix.hpp"

namespace weightflow::kernels {

// out[c] = sum_k w_k * N(c; p_k, diag(hx^2, hy^2)). Empty `weights` means 1.
void kde_sum(std::span<const Vec2> points, std::span<const double> weights, const Grid2D& grid, double hx,
             double hy, std::span<double> out);

// Gaussian-kernel numerator sum_k K_k u_k and denominator sum_k K_k with the
// unnormalized kernel K_k = exp(-|c - p_k|^2 / 2h^2).
void nadaraya_watson(std::span<const Vec2> positions, std::span<const Vec2> updates, const Grid2D& grid, double h,
                     std::span<Vec2> numerator, std::span<double> denominator);

// One explicit Euler step of dP/dt = -div(D P) + 1/2 sum_a d_a^2(s_a P)
// with face-averaged drift and a van Leer limited upwind face value, and zero flux through the boundary.
void fp_step(const Grid2D& grid, std::span<const double> p, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, double dt, std::span<double> out);

// Right-hand side of the potential equation obtained from the FP equation by
// V = -log P (diagonal diffusion), mirror boundaries for V and s, odd
// reflection for the normal drift component.
void kpz_rhs(const Grid2D& grid, std::span<const double> v, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, std::span<double> out);

// C = A B
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
// C = A^T B
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
// C = A B^T
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

namespace serial {

void kde_sum(std::span<const Vec2> points, std::span<const double> weights, const Grid2D& grid, double hx,
             double hy, std::span<double> out);
void nadaraya_watson(std::span<const Vec2> positions, std::span<const Vec2> updates, const Grid2D& grid, double h,
                     std::span<Vec2> numerator, std::span<double> denominator);
void fp_step(const Grid2D& grid, std::span<const double> p, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, double dt, std::span<double> out);
void kpz_rhs(const Grid2D& grid, std::span<const double> v, std::span<const Vec2> drift,
             std::span<const Vec2> sigma2, std::span<double> out);
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c);
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c);

}  // namespace serial

}  // namespace weightflow::kernels
