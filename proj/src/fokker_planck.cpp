#include "weightflow/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <spdlog/spdlog.h>

#include "weightflow/error.hpp"
#include "weightflow/kernels.hpp"

namespace weightflow {

void SolverConfig::validate() const {
    if (substeps_per_epoch < 1) throw InvalidInput("substeps_per_epoch must be >= 1");
    if (!(cfl_safety > 0.0 && cfl_safety <= 1.0)) throw InvalidInput("cfl_safety must lie in (0, 1]");
}

DriftField::DriftField(Grid2D grid, std::vector<Vec2> vectors, std::vector<Vec2> sigma2)
    : grid_(grid), vectors_(std::move(vectors)), sigma2_(std::move(sigma2)) {
    if (vectors_.size() != grid_.size() || sigma2_.size() != grid_.size())
        throw InvalidInput("drift field size does not match grid");
    for (const auto& v : vectors_)
        if (!std::isfinite(v.x) || !std::isfinite(v.y)) throw InvalidInput("drift vectors must be finite");
    for (const auto& s : sigma2_)
        if (!std::isfinite(s.x) || !std::isfinite(s.y) || s.x < 0.0 || s.y < 0.0)
            throw InvalidInput("sigma^2 must be finite and non-negative");
}

DriftField DriftField::zero(const Grid2D& grid) {
    return DriftField(grid, std::vector<Vec2>(grid.size()), std::vector<Vec2>(grid.size()));
}

double CflRatios::worst() const { return std::max({drift, diffusion, positivity}); }

CflRatios cfl_ratios(const DriftField& f, double dt) {
    const Grid2D& g = f.grid();
    const double h = std::min(g.dx(), g.dy());
    double dmax = 0.0, smax = 0.0, outflow = 0.0;
    const auto& d = f.vectors();
    const auto& s = f.sigma2();
    for (int i = 0; i < g.nx(); ++i) {
        for (int j = 0; j < g.ny(); ++j) {
            const std::size_t c = g.index(i, j);
            dmax = std::max(dmax, std::hypot(d[c].x, d[c].y));
            smax = std::max({smax, s[c].x, s[c].y});
            // rate at which mass leaves cell c; a limited face value is at most twice the cell value
            double rate = s[c].x / (g.dx() * g.dx()) + s[c].y / (g.dy() * g.dy());
            if (i + 1 < g.nx()) rate += 2.0 * std::max(0.5 * (d[c].x + d[g.index(i + 1, j)].x), 0.0) / g.dx();
            if (i > 0) rate += 2.0 * std::max(-0.5 * (d[c].x + d[g.index(i - 1, j)].x), 0.0) / g.dx();
            if (j + 1 < g.ny()) rate += 2.0 * std::max(0.5 * (d[c].y + d[g.index(i, j + 1)].y), 0.0) / g.dy();
            if (j > 0) rate += 2.0 * std::max(-0.5 * (d[c].y + d[g.index(i, j - 1)].y), 0.0) / g.dy();
            outflow = std::max(outflow, rate);
        }
    }
    return CflRatios{dt * dmax / h, dt * 2.0 * smax / (h * h), dt * outflow};
}

namespace {

void check_stability(const DriftField& f, const SolverConfig& cfg, CflRatios& ratios) {
    ratios = cfl_ratios(f, cfg.dt());
    const double worst = ratios.worst();
    if (worst > cfg.cfl_safety) {
        const double required = cfg.dt() * cfg.cfl_safety / worst;
        std::ostringstream msg;
        msg << "CFL violated: dt=" << cfg.dt() << " exceeds stable dt=" << required << " (drift ratio "
            << ratios.drift << ", diffusion ratio " << ratios.diffusion << ", positivity ratio " << ratios.positivity
            << "); use at least " << static_cast<long>(std::ceil(1.0 / required)) << " substeps per epoch";
        throw StabilityError(msg.str(), cfg.dt(), required);
    }
}

}  // namespace

Density fp_step(const Density& p, const DriftField& f, const SolverConfig& cfg, StepStats* stats) {
    cfg.validate();
    if (!(p.grid() == f.grid())) throw InvalidInput("density and drift field live on different grids");
    StepStats st;
    check_stability(f, cfg, st.cfl);

    std::vector<double> next(p.values().size());
    kernels::fp_step(p.grid(), p.values(), f.vectors(), f.sigma2(), cfg.dt(), next);
    // Under the positivity bound each new value is a convex combination of old
    // ones; only round-off at a coefficient of exactly zero can go negative.
    const double pmax = *std::max_element(p.values().begin(), p.values().end());
    for (double& v : next) {
        if (v < 0.0) {
            if (v < -1e-12 * pmax) throw NumericError("fp_step produced a negative density; stencil is not monotone");
            v = 0.0;
        }
    }

    st.mass_before = p.mass();
    Density out(p.grid(), std::move(next), p.time() + cfg.dt());
    st.mass_after = out.mass();
    const double drift = st.mass_before > 0.0 ? std::abs(st.mass_after - st.mass_before) / st.mass_before : 0.0;
    if (drift > 1e-6) {
        spdlog::warn("fp_step: mass changed by {:.3e} (relative); rescaling to {:.17g}", drift, st.mass_before);
        out.normalize();
        std::vector<double> v = out.values();
        for (double& x : v) x *= st.mass_before;
        out = Density(out.grid(), std::move(v), out.time());
        st.mass_after = out.mass();
        st.renormalized = true;
    }
    st.max_density = *std::max_element(out.values().begin(), out.values().end());
    if (stats) *stats = st;
    return out;
}

Density evolve_epoch(const Density& p, const DriftProvider& drift, const SolverConfig& cfg,
                     const StepObserver& observer) {
    cfg.validate();
    const double t0 = p.time();
    Density cur = p;
    for (int k = 0; k < cfg.substeps_per_epoch; ++k) {
        const double t = t0 + k * cfg.dt();
        StepStats st;
        try {
            cur = fp_step(cur, drift(t), cfg, &st);
        } catch (const StabilityError& e) {
            throw StabilityError("sub-step " + std::to_string(k) + ": " + e.what(), e.dt(), e.required_dt());
        } catch (const InvalidInput& e) {
            throw InvalidInput("sub-step " + std::to_string(k) + ": " + e.what());
        }
        if (observer) observer(k, st);
    }
    cur.set_time(t0 + 1.0);
    return cur;
}

PotentialField kpz_step(const PotentialField& v, const DriftField& f, const SolverConfig& cfg) {
    cfg.validate();
    if (!(v.grid() == f.grid())) throw InvalidInput("potential and drift field live on different grids");
    CflRatios ratios;
    check_stability(f, cfg, ratios);
    std::vector<double> rhs(v.values().size());
    kernels::kpz_rhs(v.grid(), v.values(), f.vectors(), f.sigma2(), rhs);
    std::vector<double> next(v.values());
    for (std::size_t c = 0; c < next.size(); ++c) next[c] += cfg.dt() * rhs[c];
    return PotentialField(v.grid(), std::move(next), v.floor(), v.time() + cfg.dt());
}

PotentialField kpz_evolve_epoch(const PotentialField& v, const DriftProvider& drift, const SolverConfig& cfg) {
    cfg.validate();
    const double t0 = v.time();
    PotentialField cur = v;
    for (int k = 0; k < cfg.substeps_per_epoch; ++k) {
        try {
            cur = kpz_step(cur, drift(t0 + k * cfg.dt()), cfg);
        } catch (const StabilityError& e) {
            throw StabilityError("sub-step " + std::to_string(k) + ": " + e.what(), e.dt(), e.required_dt());
        }
    }
    return PotentialField(cur.grid(), cur.values(), cur.floor(), t0 + 1.0);
}

}  // namespace weightflow
