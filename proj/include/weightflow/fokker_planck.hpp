#pragma once

#include <functional>
#include <vector>

#include "weightflow/grid.hpp"

namespace weightflow {

enum class Boundary { zero_flux };

struct SolverConfig {
    int substeps_per_epoch = 100;
    Boundary boundary = Boundary::zero_flux;
    double cfl_safety = 1.0;

    // Step length in epochs.
    double dt() const { return 1.0 / substeps_per_epoch; }
    void validate() const;
};

// Drift D(w, t) in weight units per epoch and diagonal diffusion sigma^2
// (x and y entries) in weight^2 per epoch, one of each per grid cell.
class DriftField {
public:
    DriftField(Grid2D grid, std::vector<Vec2> vectors, std::vector<Vec2> sigma2);
    static DriftField zero(const Grid2D& grid);

    const Grid2D& grid() const { return grid_; }
    const std::vector<Vec2>& vectors() const { return vectors_; }
    const std::vector<Vec2>& sigma2() const { return sigma2_; }

private:
    Grid2D grid_;
    std::vector<Vec2> vectors_;
    std::vector<Vec2> sigma2_;
};

// Ratios of dt to each stability bound; a step is admissible when all are <= cfl_safety.
struct CflRatios {
    double drift = 0.0;      // dt * max|D| / min(dx, dy)
    double diffusion = 0.0;  // dt * 2 max sigma^2 / min(dx, dy)^2
    double positivity = 0.0; // dt * max_cell (outflow rate of the upwind + diffusion stencil)

    double worst() const;
};

CflRatios cfl_ratios(const DriftField& f, double dt);

struct StepStats {
    double mass_before = 0.0;
    double mass_after = 0.0;
    double max_density = 0.0;
    CflRatios cfl;
    bool renormalized = false;
};

// One explicit step of dP/dt = -div(D P) + 1/2 Lap(sigma^2 P). Throws
// StabilityError when dt exceeds any bound, InvalidInput on grid mismatch.
// If the step changes the mass by more than 1e-6 (relative) the result is
// rescaled to the input mass and the correction is logged.
Density fp_step(const Density& p, const DriftField& f, const SolverConfig& cfg, StepStats* stats = nullptr);

using DriftProvider = std::function<DriftField(double t)>;
using StepObserver = std::function<void(int step, const StepStats&)>;

// substeps_per_epoch calls of fp_step with the field supplied for each
// sub-step start time; the result's time is p.time() + 1.
Density evolve_epoch(const Density& p, const DriftProvider& drift, const SolverConfig& cfg,
                     const StepObserver& observer = {});

// One explicit step of the potential equation for V = -log P:
//   dV/dt = 1/2 sum_a [ d_a(s_a d_a V) - s_a (d_a V)^2 + d_a s_a d_a V - d_a^2 s_a ] - D.grad V + div D
PotentialField kpz_step(const PotentialField& v, const DriftField& f, const SolverConfig& cfg);

PotentialField kpz_evolve_epoch(const PotentialField& v, const DriftProvider& drift, const SolverConfig& cfg);

}  // namespace weightflow
