#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "weightflow/fokker_planck.hpp"
#include "weightflow/grid.hpp"

namespace weightflow {

// G(w, t) = t D(w, t) on the drift grid.
struct BetaField {
    Grid2D grid;
    std::vector<Vec2> vectors;
    double time = 0.0;
};

BetaField beta_from_drift(const DriftField& d, double t);

// Divergence of a cell field: central differences inside, second-order
// one-sided differences on boundary cells.
std::vector<double> divergence(const Grid2D& grid, std::span<const Vec2> field);

struct Residual {
    std::vector<double> values;
    double l1 = 0.0;   // sum |r| * cell area
    double max_abs = 0.0;
};

// Per-cell G.grad P + t dP/dt + (div G) P with central grad P and the forward
// difference (p_next - p) / (p_next.time() - p.time()).
Residual cs_residual(const Density& p, const Density& p_next, const BetaField& beta, double t);

// Conservative divergence of P G: face fluxes are centre averages inside; the
// boundary faces are set so edge cells get a second-order one-sided difference.
Residual stationary_residual(const Density& p, const BetaField& g);

struct CurvePoint {
    double s = 0.0;    // flow parameter, dw/ds = G
    double arc = 0.0;  // arc length
    Vec2 w;
    double p = 0.0;
};

struct Curve {
    std::vector<CurvePoint> points;
    bool exited = false;  // left the grid before the requested number of steps
};

// Bilinear interpolation of a cell field, linear extrapolation within the
// outer half cell.
Vec2 interpolate(const Grid2D& grid, std::span<const Vec2> field, Vec2 w);
double interpolate(const Grid2D& grid, std::span<const double> field, Vec2 w);

// Integrates dw/ds = G with classical RK4 in arc length (step defaults to
// min(dx, dy) / 4), carrying s and log P with d log P / ds = -div G.
// Throws StagnationError when |G| < 1e-10 at any stage.
std::vector<Curve> characteristic_solution(const BetaField& g, std::span<const Vec2> seeds, std::span<const double> p0,
                                           int arc_steps, double step = 0.0);

struct Extrapolation {
    double slope = 0.0;      // d log r / d epoch
    double intercept = 0.0;
    std::optional<double> crossing;  // epoch where the fitted line meets log(threshold)
};

// Least-squares line through (epoch, log r) over the positive residuals.
Extrapolation extrapolate_crossing(std::span<const double> epochs, std::span<const double> residuals, double threshold);

enum class TerminalCondition { stationary, scale_invariant };

struct TerminalReport {
    std::vector<double> epochs;     // time of the earlier density of each pair
    std::vector<double> dpdt_l1;    // L1 of (P_{k+1} - P_k) / dt
    std::vector<double> tdpdt_l1;   // t_k times the above
    double threshold = 0.0;
    TerminalCondition condition = TerminalCondition::stationary;
    std::optional<double> terminal;  // for `condition`
    std::optional<double> terminal_stationary;
    std::optional<double> terminal_scale_invariant;
    Extrapolation fit;  // on the residual of `condition`

    std::string triggered() const;  // "none", "stationary", "scale_invariant" or "both"
};

// Needs at least three densities on one grid.
TerminalReport terminal_detect(std::span<const Density> history, double threshold,
                               TerminalCondition condition = TerminalCondition::stationary);

// First epoch whose residual and the next one are both below threshold.
std::optional<double> first_quiet_epoch(std::span<const double> epochs, std::span<const double> residuals,
                                        double threshold);

struct MassAudit {
    std::vector<double> masses;
    double max_deviation = 0.0;
    std::vector<int> flagged;  // indices with |mass - 1| > tolerance
    double tolerance = 1e-6;
};

MassAudit mass_audit(std::span<const Density> history, double tolerance = 1e-6);

}  // namespace weightflow
