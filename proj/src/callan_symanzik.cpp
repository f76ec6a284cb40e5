#include "weightflow/callan_symanzik.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "weightflow/error.hpp"

namespace weightflow {

BetaField beta_from_drift(const DriftField& d, double t) {
    if (!(t > 0.0) || !std::isfinite(t)) throw InvalidInput("beta needs t > 0");
    BetaField b{d.grid(), d.vectors(), t};
    for (auto& v : b.vectors) v = Vec2{t * v.x, t * v.y};
    return b;
}

namespace {

template <class F>
double axis_derivative(F&& f, int k, int n, double h) {
    if (k == 0) return (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
    if (k == n - 1) return (3.0 * f(n - 1) - 4.0 * f(n - 2) + f(n - 3)) / (2.0 * h);
    return (f(k + 1) - f(k - 1)) / (2.0 * h);
}

void finish(Residual& r, const Grid2D& g) {
    double l1 = 0.0, mx = 0.0;
    for (double v : r.values) {
        l1 += std::abs(v);
        mx = std::max(mx, std::abs(v));
    }
    r.l1 = l1 * g.cell_area();
    r.max_abs = mx;
}

}  // namespace

std::vector<double> divergence(const Grid2D& g, std::span<const Vec2> f) {
    if (f.size() != g.size()) throw InvalidInput("field size does not match grid");
    std::vector<double> out(g.size());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j)
            out[g.index(i, j)] = axis_derivative([&](int a) { return f[g.index(a, j)].x; }, i, g.nx(), g.dx()) +
                                 axis_derivative([&](int b) { return f[g.index(i, b)].y; }, j, g.ny(), g.dy());
    return out;
}

Residual cs_residual(const Density& p, const Density& p_next, const BetaField& beta, double t) {
    const Grid2D& g = p.grid();
    if (!(p_next.grid() == g) || !(beta.grid == g)) throw InvalidInput("cs_residual: grid mismatch");
    const double dt = p_next.time() - p.time();
    if (!(dt > 0.0)) throw InvalidInput("cs_residual: p_next must be later than p");
    const auto n = divergence(g, beta.vectors);
    Residual r;
    r.values.resize(g.size());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const auto k = g.index(i, j);
            const double px = axis_derivative([&](int a) { return p(a, j); }, i, g.nx(), g.dx());
            const double py = axis_derivative([&](int b) { return p(i, b); }, j, g.ny(), g.dy());
            const Vec2 b = beta.vectors[k];
            r.values[k] = b.x * px + b.y * py + t * (p_next.values()[k] - p.values()[k]) / dt + n[k] * p.values()[k];
        }
    finish(r, g);
    return r;
}

namespace {

// Flux through the face between samples a-1 and a of n, a in [0, n]. The
// boundary value makes the edge cell see the one-sided second-order difference.
template <class F>
double face_flux(F&& f, int a, int n) {
    if (a == 0) return (4.0 * f(0) - 3.0 * f(1) + f(2)) / 2.0;
    if (a == n) return (4.0 * f(n - 1) - 3.0 * f(n - 2) + f(n - 3)) / 2.0;
    return 0.5 * (f(a - 1) + f(a));
}

}  // namespace

Residual stationary_residual(const Density& p, const BetaField& gf) {
    const Grid2D& g = p.grid();
    if (!(gf.grid == g)) throw InvalidInput("stationary_residual: grid mismatch");
    const auto& pv = p.values();
    auto fx = [&](int a, int j) { return pv[g.index(a, j)] * gf.vectors[g.index(a, j)].x; };
    auto fy = [&](int i, int b) { return pv[g.index(i, b)] * gf.vectors[g.index(i, b)].y; };
    Residual r;
    r.values.resize(g.size());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            auto col = [&](int a) { return fx(a, j); };
            auto row = [&](int b) { return fy(i, b); };
            r.values[g.index(i, j)] = (face_flux(col, i + 1, g.nx()) - face_flux(col, i, g.nx())) / g.dx() +
                                      (face_flux(row, j + 1, g.ny()) - face_flux(row, j, g.ny())) / g.dy();
        }
    finish(r, g);
    return r;
}

namespace {

struct Stencil {
    int i0, j0;
    double fx, fy;
};

Stencil locate(const Grid2D& g, Vec2 w) {
    const double u = (w.x - g.x_min()) / g.dx() - 0.5;
    const double v = (w.y - g.y_min()) / g.dy() - 0.5;
    const int i0 = std::clamp(static_cast<int>(std::floor(u)), 0, g.nx() - 2);
    const int j0 = std::clamp(static_cast<int>(std::floor(v)), 0, g.ny() - 2);
    return {i0, j0, u - i0, v - j0};
}

template <class T, class Get>
T bilinear(const Grid2D& g, const Stencil& s, Get&& at) {
    const T a = at(g.index(s.i0, s.j0)), b = at(g.index(s.i0 + 1, s.j0));
    const T c = at(g.index(s.i0, s.j0 + 1)), d = at(g.index(s.i0 + 1, s.j0 + 1));
    const double w00 = (1 - s.fx) * (1 - s.fy), w10 = s.fx * (1 - s.fy), w01 = (1 - s.fx) * s.fy, w11 = s.fx * s.fy;
    if constexpr (std::is_same_v<T, Vec2>)
        return Vec2{w00 * a.x + w10 * b.x + w01 * c.x + w11 * d.x, w00 * a.y + w10 * b.y + w01 * c.y + w11 * d.y};
    else
        return w00 * a + w10 * b + w01 * c + w11 * d;
}

}  // namespace

Vec2 interpolate(const Grid2D& g, std::span<const Vec2> field, Vec2 w) {
    return bilinear<Vec2>(g, locate(g, w), [&](std::size_t k) { return field[k]; });
}

double interpolate(const Grid2D& g, std::span<const double> field, Vec2 w) {
    return bilinear<double>(g, locate(g, w), [&](std::size_t k) { return field[k]; });
}

std::vector<Curve> characteristic_solution(const BetaField& gf, std::span<const Vec2> seeds, std::span<const double> p0,
                                           int arc_steps, double step) {
    if (seeds.size() != p0.size()) throw InvalidInput("one initial value per seed is required");
    if (arc_steps < 0) throw InvalidInput("arc_steps must be non-negative");
    const Grid2D& g = gf.grid;
    if (step == 0.0) step = std::min(g.dx(), g.dy()) / 4.0;
    if (!(step > 0.0)) throw InvalidInput("arc step must be positive");
    for (double v : p0)
        if (!(v > 0.0)) throw InvalidInput("initial values must be positive");
    const auto div = divergence(g, gf.vectors);

    // state: x, y, s, log P; derivatives with respect to arc length
    using State = std::array<double, 4>;
    auto rhs = [&](const State& y) {
        const Vec2 w{y[0], y[1]};
        const Vec2 v = interpolate(g, gf.vectors, w);
        const double speed = std::hypot(v.x, v.y);
        if (!(speed >= 1e-10))
            throw StagnationError("|G| below 1e-10 at (" + std::to_string(w.x) + ", " + std::to_string(w.y) + ")");
        const double n = interpolate(g, div, w);
        return State{v.x / speed, v.y / speed, 1.0 / speed, -n / speed};
    };
    auto axpy = [](const State& y, double h, const State& k) {
        return State{y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]};
    };

    std::vector<Curve> out(seeds.size());
    for (std::size_t c = 0; c < seeds.size(); ++c) {
        Curve& curve = out[c];
        if (!g.contains(seeds[c])) {
            curve.exited = true;
            continue;
        }
        State y{seeds[c].x, seeds[c].y, 0.0, std::log(p0[c])};
        curve.points.push_back(CurvePoint{0.0, 0.0, seeds[c], p0[c]});
        for (int n = 0; n < arc_steps; ++n) {
            const State k1 = rhs(y);
            const State k2 = rhs(axpy(y, step / 2, k1));
            const State k3 = rhs(axpy(y, step / 2, k2));
            const State k4 = rhs(axpy(y, step, k3));
            State next;
            for (int q = 0; q < 4; ++q) next[q] = y[q] + step / 6.0 * (k1[q] + 2.0 * k2[q] + 2.0 * k3[q] + k4[q]);
            if (!g.contains(Vec2{next[0], next[1]})) {
                curve.exited = true;
                break;
            }
            y = next;
            curve.points.push_back(CurvePoint{y[2], (n + 1) * step, Vec2{y[0], y[1]}, std::exp(y[3])});
        }
    }
    return out;
}

Extrapolation extrapolate_crossing(std::span<const double> epochs, std::span<const double> residuals, double threshold) {
    if (epochs.size() != residuals.size()) throw InvalidInput("epochs and residuals differ in length");
    if (!(threshold > 0.0)) throw InvalidInput("threshold must be positive");
    std::vector<double> xs, ys;
    for (std::size_t k = 0; k < epochs.size(); ++k)
        if (residuals[k] > 0.0) {
            xs.push_back(epochs[k]);
            ys.push_back(std::log(residuals[k]));
        }
    Extrapolation e;
    if (xs.size() < 2) return e;
    const double n = static_cast<double>(xs.size());
    double xm = 0.0, ym = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        xm += xs[k];
        ym += ys[k];
    }
    xm /= n;
    ym /= n;
    const bool flat = *std::max_element(ys.begin(), ys.end()) == *std::min_element(ys.begin(), ys.end());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        sxy += (xs[k] - xm) * (ys[k] - ym);
        sxx += (xs[k] - xm) * (xs[k] - xm);
    }
    e.slope = flat || sxx == 0.0 ? 0.0 : sxy / sxx;
    e.intercept = flat ? ys.front() : ym - e.slope * xm;
    if (e.slope < 0.0) e.crossing = (std::log(threshold) - e.intercept) / e.slope;
    return e;
}

std::optional<double> first_quiet_epoch(std::span<const double> epochs, std::span<const double> residuals,
                                        double threshold) {
    for (std::size_t k = 0; k + 1 < residuals.size(); ++k)
        if (residuals[k] < threshold && residuals[k + 1] < threshold) return epochs[k];
    return std::nullopt;
}

std::string TerminalReport::triggered() const {
    if (terminal_stationary && terminal_scale_invariant) return "both";
    if (terminal_stationary) return "stationary";
    if (terminal_scale_invariant) return "scale_invariant";
    return "none";
}

TerminalReport terminal_detect(std::span<const Density> history, double threshold, TerminalCondition condition) {
    if (history.size() < 3) throw InvalidInput("terminal detection needs at least 3 epochs of history");
    if (!(threshold > 0.0)) throw InvalidInput("threshold must be positive");
    const Grid2D& g = history.front().grid();
    TerminalReport rep;
    rep.threshold = threshold;
    rep.condition = condition;
    for (std::size_t k = 0; k + 1 < history.size(); ++k) {
        const Density& a = history[k];
        const Density& b = history[k + 1];
        if (!(a.grid() == g) || !(b.grid() == g)) throw InvalidInput("history densities must share one grid");
        const double dt = b.time() - a.time();
        if (!(dt > 0.0)) throw InvalidInput("history times must increase");
        double l1 = 0.0;
        for (std::size_t c = 0; c < g.size(); ++c) l1 += std::abs(b.values()[c] - a.values()[c]);
        l1 *= g.cell_area() / dt;
        rep.epochs.push_back(a.time());
        rep.dpdt_l1.push_back(l1);
        rep.tdpdt_l1.push_back(std::abs(a.time()) * l1);
    }
    rep.terminal_stationary = first_quiet_epoch(rep.epochs, rep.dpdt_l1, threshold);
    rep.terminal_scale_invariant = first_quiet_epoch(rep.epochs, rep.tdpdt_l1, threshold);
    const bool st = condition == TerminalCondition::stationary;
    rep.terminal = st ? rep.terminal_stationary : rep.terminal_scale_invariant;
    rep.fit = extrapolate_crossing(rep.epochs, st ? rep.dpdt_l1 : rep.tdpdt_l1, threshold);
    return rep;
}

MassAudit mass_audit(std::span<const Density> history, double tolerance) {
    MassAudit a;
    a.tolerance = tolerance;
    for (std::size_t k = 0; k < history.size(); ++k) {
        const double m = history[k].mass();
        a.masses.push_back(m);
        a.max_deviation = std::max(a.max_deviation, std::abs(m - 1.0));
        if (std::abs(m - 1.0) > tolerance) a.flagged.push_back(static_cast<int>(k));
    }
    return a;
}

}  // namespace weightflow
