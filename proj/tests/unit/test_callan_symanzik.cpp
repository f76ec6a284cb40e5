#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "weightflow/callan_symanzik.hpp"
#include "weightflow/error.hpp"
#include "weightflow/rng.hpp"

using namespace weightflow;

namespace {

constexpr double kPi = std::numbers::pi;

template <class F>
std::vector<Vec2> field(const Grid2D& g, F&& f) {
    std::vector<Vec2> v(g.size());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) v[g.index(i, j)] = f(g.x(i), g.y(j));
    return v;
}

DriftField drift_only(const Grid2D& g, std::vector<Vec2> d) { return DriftField(g, std::move(d), std::vector<Vec2>(g.size())); }

std::vector<Density> history_from(const Grid2D& g, const std::vector<Vec2>& centres) {
    std::vector<Density> h;
    for (std::size_t k = 0; k < centres.size(); ++k) {
        Density d = Density::gaussian(g, centres[k], 0.3);
        d.set_time(static_cast<double>(k));
        h.push_back(d);
    }
    return h;
}

}  // namespace

TEST_CASE("beta is t times the drift") {
    const Grid2D g(-1, 1, -1, 1, 8, 8);
    std::mt19937_64 rng(1);
    std::vector<Vec2> d(g.size());
    for (auto& v : d) v = Vec2{normal01(rng), normal01(rng)};
    const DriftField f = drift_only(g, d);
    CHECK(beta_from_drift(f, 1.0).vectors == d);
    const BetaField b = beta_from_drift(f, 2.5);
    CHECK(b.time == 2.5);
    for (std::size_t c = 0; c < d.size(); ++c) {
        CHECK(b.vectors[c].x == 2.5 * d[c].x);
        CHECK(b.vectors[c].y == 2.5 * d[c].y);
    }
    for (double t : {0.5, 2.0, 4.0, 1.0 / 1024}) {
        const BetaField bt = beta_from_drift(f, t);
        for (std::size_t c = 0; c < d.size(); ++c) {
            CHECK(bt.vectors[c].x / t == d[c].x);
            CHECK(bt.vectors[c].y / t == d[c].y);
        }
    }
    for (const auto& v : beta_from_drift(DriftField::zero(g), 7.0).vectors) CHECK((v.x == 0.0 && v.y == 0.0));
    CHECK_THROWS_AS(beta_from_drift(f, 0.0), InvalidInput);
    CHECK_THROWS_AS(beta_from_drift(f, -1.0), InvalidInput);
}

TEST_CASE("divergence and interpolation are exact on linear fields") {
    const Grid2D g(-1, 2, -1, 1, 12, 9);
    const auto v = field(g, [](double x, double y) { return Vec2{2 * x - y + 1, 0.5 * x + 3 * y}; });
    for (double d : divergence(g, v)) CHECK(d == doctest::Approx(5.0).epsilon(1e-12));
    for (Vec2 w : {Vec2{0.1, 0.2}, Vec2{-0.95, 0.97}, Vec2{1.99, -0.99}}) {
        const Vec2 got = interpolate(g, v, w);
        CHECK(got.x == doctest::Approx(2 * w.x - w.y + 1).epsilon(1e-12));
        CHECK(got.y == doctest::Approx(0.5 * w.x + 3 * w.y).epsilon(1e-12));
    }
    CHECK_THROWS_AS(divergence(g, std::vector<Vec2>(3)), InvalidInput);
}

TEST_CASE("static density with zero beta has zero residual") {
    const Grid2D g(-2, 2, -2, 2, 16, 16);
    const Density p = Density::gaussian(g, Vec2{0.2, 0.1}, 0.5);
    Density q = p;
    q.set_time(1.0);
    const BetaField b{g, std::vector<Vec2>(g.size()), 1.0};
    const Residual r = cs_residual(p, q, b, 1.0);
    CHECK(r.l1 == 0.0);
    CHECK(r.max_abs == 0.0);
    CHECK_THROWS_AS(cs_residual(p, p, b, 1.0), InvalidInput);
    CHECK_THROWS_AS(cs_residual(p, Density::uniform(Grid2D(-2, 2, -2, 2, 8, 8)), b, 1.0), InvalidInput);
}

TEST_CASE("unrelated densities give the fixture residual") {
    const Grid2D g(-2, 2, -2, 2, 24, 24);
    const Density p = Density::gaussian(g, Vec2{-0.5, 0.0}, 0.3);
    Density q = Density::gaussian(g, Vec2{0.6, 0.4}, 0.2);
    q.set_time(0.5);
    const BetaField b{g, std::vector<Vec2>(g.size()), 3.0};
    const Residual r = cs_residual(p, q, b, 3.0);
    double l1 = 0;
    for (std::size_t c = 0; c < g.size(); ++c) l1 += std::abs(3.0 * (q.values()[c] - p.values()[c]) / 0.5);
    l1 *= g.cell_area();
    CHECK(r.l1 == doctest::Approx(l1).epsilon(1e-12));
    CHECK(r.l1 > 1.0);
}

TEST_CASE("cs residual of drift-only evolution vanishes at first order") {
    const Grid2D g(-2, 2, -2, 2, 64, 64);
    const auto G = field(g, [](double x, double y) {
        return Vec2{0.3 * std::sin(kPi * x / 2) * (1 + 0.2 * y), 0.2 * std::sin(kPi * y / 2)};
    });
    const double t = 1.0;
    Density p = Density::gaussian(g, Vec2{0.3, -0.2}, 0.4);
    p.set_time(t);
    const BetaField beta{g, G, t};
    SolverConfig cfg;
    cfg.substeps_per_epoch = 1280;
    auto residual = [&](double span) {
        Density q = p;
        const int steps = static_cast<int>(std::lround(span * cfg.substeps_per_epoch));
        for (int k = 0; k < steps; ++k) {
            const double s = t + k * cfg.dt();
            auto d = G;
            for (auto& v : d) v = Vec2{v.x / s, v.y / s};
            q = fp_step(q, drift_only(g, d), cfg);
        }
        return cs_residual(p, q, beta, t).l1;
    };
    const double r1 = residual(0.1), r2 = residual(0.05), r3 = residual(0.025);
    CHECK(r3 < r2);
    CHECK(r2 < r1);
    CHECK(std::log2(r1 / r2) >= 0.9);
    CHECK(std::log2(r2 / r3) >= 0.9);
}

TEST_CASE("stationary residual") {
    const Grid2D g(-2, 2, -2, 2, 32, 32);
    const Density p = Density::gaussian(g, Vec2{}, 0.5);
    CHECK(stationary_residual(p, BetaField{g, std::vector<Vec2>(g.size()), 1.0}).l1 == 0.0);

    // P = c / g(x1) with G = (g(x1), 0) makes P G constant
    auto gx = [](double x) { return 1.0 + 0.5 * std::sin(x); };
    for (int n : {32, 64}) {
        const Grid2D h(-2, 2, -1, 1, n, n);
        const Density q = Density::from_function(h, [&](double x, double) { return 1.0 / gx(x); });
        const BetaField b{h, field(h, [&](double x, double) { return Vec2{gx(x), 0.0}; }), 1.0};
        CHECK(stationary_residual(q, b).max_abs < 1e-12);
    }
    // second order against the analytic divergence of P G on a non-stationary pair
    auto err = [](int n) {
        const Grid2D h(-1, 1, -1, 1, n, n);
        auto P = [](double x, double y) { return 2 + std::cos(x) * std::sin(y); };
        const Density q(h, [&] {
            std::vector<double> v(h.size());
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) v[h.index(i, j)] = P(h.x(i), h.y(j));
            return v;
        }());
        const BetaField b{h, field(h, [](double x, double y) { return Vec2{1 + 0.5 * x * x, std::sin(y)}; }), 1.0};
        const Residual r = stationary_residual(q, b);
        double worst = 0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double x = h.x(i), y = h.y(j);
                const double px = -std::sin(x) * std::sin(y), py = std::cos(x) * std::cos(y);
                const double exact = px * (1 + 0.5 * x * x) + P(x, y) * x + py * std::sin(y) + P(x, y) * std::cos(y);
                worst = std::max(worst, std::abs(r.values[h.index(i, j)] - exact));
            }
        return worst;
    };
    CHECK(err(32) / err(64) > 3.5);
}

TEST_CASE("characteristics of a rotation keep P constant") {
    const Grid2D g(-2, 2, -2, 2, 64, 64);
    const BetaField b{g, field(g, [](double x, double y) { return Vec2{-y, x}; }), 1.0};
    const std::vector<Vec2> seeds{{1.0, 0.0}, {0.0, -1.5}};
    const std::vector<double> p0{0.7, 0.2};
    const auto curves = characteristic_solution(b, seeds, p0, 400);
    REQUIRE(curves.size() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK_FALSE(curves[c].exited);
        CHECK(curves[c].points.size() == 401);
        const double r0 = std::hypot(seeds[c].x, seeds[c].y);
        for (const auto& pt : curves[c].points) {
            CHECK(pt.p == doctest::Approx(p0[c]).epsilon(1e-12));
            CHECK(std::hypot(pt.w.x, pt.w.y) == doctest::Approx(r0).epsilon(1e-6));
        }
    }
}

TEST_CASE("characteristics of a radial field decay as exp(-2s)") {
    const Grid2D g(-3, 3, -3, 3, 64, 64);
    const BetaField b{g, field(g, [](double x, double y) { return Vec2{x, y}; }), 1.0};
    const std::vector<Vec2> seeds{{0.3, 0.1}, {-0.2, -0.4}};
    const auto curves = characteristic_solution(b, seeds, std::vector<double>{1.0, 2.0}, 2000);
    for (std::size_t c = 0; c < 2; ++c) {
        CHECK(curves[c].exited);
        CHECK(curves[c].points.size() > 100);
        const double p0 = c == 0 ? 1.0 : 2.0;
        const double r0 = std::hypot(seeds[c].x, seeds[c].y);
        for (const auto& pt : curves[c].points) {
            CHECK(std::abs(pt.p - p0 * std::exp(-2 * pt.s)) < 1e-6);
            CHECK(pt.s == doctest::Approx(std::log(std::hypot(pt.w.x, pt.w.y) / r0)).epsilon(1e-6));
            CHECK(g.contains(pt.w));
        }
    }
}

TEST_CASE("one dimensional field follows const over G") {
    const Grid2D g(-2, 2, -1, 1, 128, 32);
    auto gx = [](double x) { return 0.2 + x * x; };
    const BetaField b{g, field(g, [&](double x, double) { return Vec2{gx(x), 0.0}; }), 1.0};
    const std::vector<Vec2> seeds{{-1.9, -0.5}, {-1.9, 0.0}, {-1.0, 0.7}};
    const auto curves = characteristic_solution(b, seeds, std::vector<double>{1.0, 1.0, 1.0}, 1000);
    for (std::size_t c = 0; c < seeds.size(); ++c) {
        CHECK(curves[c].points.size() > 10);
        for (const auto& pt : curves[c].points) {
            CHECK(pt.w.y == doctest::Approx(seeds[c].y));
            CHECK(pt.p == doctest::Approx(gx(seeds[c].x) / gx(pt.w.x)).epsilon(1e-2));
        }
    }
}

TEST_CASE("characteristic solution on the grid solves the stationary equation") {
    // radial field on a patch away from its source; P built from one curve
    const Grid2D g(1, 3, 1, 3, 64, 64);
    const BetaField b{g, field(g, [](double x, double y) { return Vec2{x, y}; }), 1.0};
    const std::vector<Vec2> seed{{1.0005, 1.0005}};
    const auto curve = characteristic_solution(b, seed, std::vector<double>{1.0}, 4000, 0.002).front();
    REQUIRE(curve.exited);
    auto p_at = [&](double r) {
        const auto& pts = curve.points;
        auto radius = [](const CurvePoint& q) { return std::hypot(q.w.x, q.w.y); };
        std::size_t k = 1;
        while (k + 1 < pts.size() && radius(pts[k]) < r) ++k;
        const double r0 = radius(pts[k - 1]), r1 = radius(pts[k]);
        const double u = (r - r0) / (r1 - r0);
        return (1 - u) * pts[k - 1].p + u * pts[k].p;
    };
    Density p = Density::from_function(g, [&](double x, double y) { return p_at(std::hypot(x, y)); });
    const Residual r = stationary_residual(p, b);
    CHECK(r.l1 < 1e-3);
    // the same grid with a non-stationary density is far off
    CHECK(stationary_residual(Density::uniform(g), b).l1 > 0.5);
}

TEST_CASE("characteristic errors and exits") {
    const Grid2D g(-1, 1, -1, 1, 16, 16);
    const BetaField zero{g, std::vector<Vec2>(g.size()), 1.0};
    const std::vector<Vec2> s{{0.0, 0.0}};
    const std::vector<double> one{1.0};
    CHECK_THROWS_AS(characteristic_solution(zero, s, one, 10), StagnationError);
    const BetaField east{g, field(g, [](double, double) { return Vec2{1.0, 0.0}; }), 1.0};
    const auto out = characteristic_solution(east, std::vector<Vec2>{{0.9, 0.0}, {5.0, 0.0}}, std::vector<double>{1, 1}, 100);
    CHECK(out[0].exited);
    CHECK(out[0].points.size() > 1);
    CHECK(out[0].points.back().w.x <= 1.0);
    CHECK(out[1].exited);
    CHECK(out[1].points.empty());
    CHECK_THROWS_AS(characteristic_solution(east, s, std::vector<double>{}, 10), InvalidInput);
    CHECK_THROWS_AS(characteristic_solution(east, s, std::vector<double>{-1.0}, 10), InvalidInput);
}

TEST_CASE("terminal detection on a history that freezes") {
    const Grid2D g(-2, 2, -2, 2, 32, 32);
    const auto h = history_from(g, {{-1, 0}, {-0.5, 0}, {0, 0}, {0, 0}, {0, 0}, {0, 0}});
    const TerminalReport r = terminal_detect(h, 1e-3);
    REQUIRE(r.terminal);
    CHECK(*r.terminal == 2.0);
    CHECK(r.epochs == std::vector<double>{0, 1, 2, 3, 4});
    CHECK(r.dpdt_l1[0] > 0.1);
    CHECK(r.dpdt_l1[3] == 0.0);
    CHECK(r.tdpdt_l1[1] == doctest::Approx(r.dpdt_l1[1]));
    CHECK(r.triggered() == "both");
    for (double v : r.dpdt_l1) CHECK(v >= 0.0);

    const TerminalReport si = terminal_detect(h, 1e-3, TerminalCondition::scale_invariant);
    CHECK(si.terminal == r.terminal_scale_invariant);
}

TEST_CASE("oscillating history never terminates") {
    const Grid2D g(-2, 2, -2, 2, 32, 32);
    const auto h = history_from(g, {{-0.5, 0}, {0.5, 0}, {-0.5, 0}, {0.5, 0}, {-0.5, 0}, {0.5, 0}});
    const TerminalReport r = terminal_detect(h, 1e-3);
    CHECK_FALSE(r.terminal);
    CHECK(r.triggered() == "none");
    CHECK(r.fit.slope >= 0.0);
    CHECK_FALSE(r.fit.crossing);
}

TEST_CASE("exponential decay extrapolates to the closed form crossing") {
    const double tau = 2.0, threshold = 1e-6;
    std::vector<double> e, r;
    for (int k = 0; k < 10; ++k) {
        e.push_back(k);
        r.push_back(std::exp(-k / tau));
    }
    const Extrapolation x = extrapolate_crossing(e, r, threshold);
    REQUIRE(x.crossing);
    CHECK(*x.crossing == doctest::Approx(tau * std::log(1 / threshold)).epsilon(0.05));
    CHECK(x.slope == doctest::Approx(-1 / tau));
    CHECK(first_quiet_epoch(e, r, 0.1) == 5.0);
    CHECK_FALSE(first_quiet_epoch(e, r, 1e-9));
    // one isolated quiet epoch is not enough
    const std::vector<double> blip{1, 1e-5, 1, 1};
    CHECK_FALSE(first_quiet_epoch(std::vector<double>{0, 1, 2, 3}, blip, 1e-3));
}

TEST_CASE("terminal detection errors") {
    const Grid2D g(-1, 1, -1, 1, 8, 8);
    const auto two = history_from(g, {{0, 0}, {0.1, 0}});
    CHECK_THROWS_AS(terminal_detect(two, 1e-3), InvalidInput);
    auto h = history_from(g, {{0, 0}, {0.1, 0}, {0.2, 0}});
    h[2].set_time(0.5);
    CHECK_THROWS_AS(terminal_detect(h, 1e-3), InvalidInput);
}

TEST_CASE("mass audit") {
    const Grid2D g(-2, 2, -2, 2, 32, 32);
    auto h = history_from(g, {{0, 0}, {0.2, 0}, {0.4, 0}});
    MassAudit a = mass_audit(h);
    CHECK(a.flagged.empty());
    CHECK(a.max_deviation < 1e-6);
    std::vector<double> twice(h[1].values().begin(), h[1].values().end());
    for (double& v : twice) v *= 2;
    h[1] = Density(g, twice, 1.0);
    a = mass_audit(h);
    CHECK(a.flagged == std::vector<int>{1});
    CHECK(a.max_deviation == doctest::Approx(1.0));
    CHECK(a.masses[1] == doctest::Approx(2.0));
}
