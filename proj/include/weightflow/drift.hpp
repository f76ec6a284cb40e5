#pragma once

#include <map>
#include <span>
#include <vector>

#include "weightflow/fokker_planck.hpp"
#include "weightflow/grid.hpp"

namespace weightflow {

struct AdamHyper {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eta = 1e-3;
    double eps = 1e-8;
};

// First/second moment accumulators for one parameter tensor.
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long step_count = 0;
    AdamHyper hyper;

    static AdamState zeros(std::size_t n, AdamHyper hyper);
    void validate() const;
};

struct AdamStep {
    std::vector<double> update;
    AdamState state;
};

// Bias-corrected ADAM direction -eta * m_hat / (eps + sqrt(v_hat)) using
// step_count + 1; returns the additive update and the advanced state without
// touching any weights.
AdamStep adam_direction(std::span<const double> gradient, const AdamState& state);

// In-place form used by the trainer: advances `state`, writes into `update`.
void adam_advance(AdamState& state, std::span<const double> gradient, std::span<double> update);

// Heaviside factor H(-dL/dt) on epoch-mean losses, with H(0) = 0.
struct LossGate {
    double prev_loss = 0.0;
    double curr_loss = 0.0;
    bool open = false;

    double factor() const { return open ? 1.0 : 0.0; }
};

LossGate gate(double prev_loss, double curr_loss);

// Net displacement of one bottleneck row over an epoch.
struct RowUpdateSample {
    Vec2 position;  // row at the start of the epoch
    Vec2 update;    // weight units per epoch
    double epoch_time = 0.0;
    int layer = 0;
    int row = 0;
};

// Nadaraya-Watson regression of the sample updates onto the grid with an
// isotropic Gaussian kernel of width `bandwidth`, times the gate factor.
// Cells whose total kernel weight is below 1e-8 get zero drift. sigma^2 is zero.
DriftField drift_from_rows(std::span<const RowUpdateSample> samples, const LossGate& g, const Grid2D& grid,
                           double bandwidth);

// Uniform diagonal diffusion sigma^2 = scale * eps^2 * eta^2.
double diffusion_sigma2(double eta, double eps_adam, double scale);
std::vector<Vec2> diffusion_coefficients(double eta, double eps_adam, double scale, const Grid2D& grid);

// Time-dependent drift over a run. Epoch e contributes two fields built from
// the same updates: one regressed at the rows' start positions (valid at
// t = e) and one at their end positions (t = e + 1); the drift in between is
// the linear blend.
class EpochDriftSchedule {
public:
    EpochDriftSchedule(Grid2D grid, std::vector<Vec2> sigma2);

    void add_epoch(int epoch, std::span<const RowUpdateSample> samples, const LossGate& g, double bandwidth);

    // Throws InvalidInput if no epoch covers t.
    DriftField operator()(double t) const;

    const Grid2D& grid() const { return grid_; }

private:
    struct Pair {
        std::vector<Vec2> start, end;
    };
    Grid2D grid_;
    std::vector<Vec2> sigma2_;
    std::map<int, Pair> epochs_;
};

}  // namespace weightflow
