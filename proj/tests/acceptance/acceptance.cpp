// Prints one PASS/FAIL line per acceptance criterion. Pass criterion numbers
// as arguments to run a subset.

#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "weightflow/autoencoder.hpp"
#include "weightflow/callan_symanzik.hpp"
#include "weightflow/comparison.hpp"
#include "weightflow/drift.hpp"
#include "weightflow/fokker_planck.hpp"
#include "weightflow/kde.hpp"
#include "weightflow/pipeline.hpp"
#include "weightflow/potential.hpp"
#include "weightflow/rng.hpp"

using namespace weightflow;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

fs::path source_dir() {
    const char* s = std::getenv("WF_SOURCE_DIR");
    return s ? fs::path(s) : fs::current_path();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / fmt::format("wf_accept_{}_{}", ::getpid(), name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

template <class F>
std::vector<Vec2> field(const Grid2D& g, F&& f) {
    std::vector<Vec2> v(g.size());
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) v[g.index(i, j)] = f(g.x(i), g.y(j));
    return v;
}

double max_abs(std::span<const double> a, std::span<const double> b) {
    double e = 0;
    for (std::size_t k = 0; k < a.size(); ++k) e = std::max(e, std::abs(a[k] - b[k]));
    return e;
}

struct Moments {
    double mx, my, vx, vy;
};

Moments moments(const Density& d) {
    const Grid2D& g = d.grid();
    double m = 0, mx = 0, my = 0, sxx = 0, syy = 0;
    for (int i = 0; i < g.nx(); ++i)
        for (int j = 0; j < g.ny(); ++j) {
            const double w = d(i, j) * g.cell_area();
            m += w;
            mx += w * g.x(i);
            my += w * g.y(j);
            sxx += w * g.x(i) * g.x(i);
            syy += w * g.y(j) * g.y(j);
        }
    mx /= m;
    my /= m;
    return {mx, my, sxx / m - mx * mx, syy / m - my * my};
}

SolverConfig substeps(int n) {
    SolverConfig c;
    c.substeps_per_epoch = n;
    return c;
}

// 1: full pipeline headline scores at epoch 5, three seeds
Outcome criterion1() {
    Outcome out{true, ""};
    for (std::uint64_t seed : {1, 2, 3}) {
        const auto t0 = Clock::now();
        const fs::path run = scratch(fmt::format("c1_{}", seed));
        TrainOptions tr;
        tr.mnist_dir = (source_dir() / "data" / "mnist").string();
        tr.run = run;
        tr.train.epochs = 5;
        tr.train.seed = seed;
        run_train(tr);
        EvolveOptions ev;
        ev.run = run;
        ev.grid_n = 64;
        ev.substeps = 100;
        run_evolve(ev);
        CompareOptions cm;
        cm.run = run;
        cm.epochs = {5};
        cm.images = false;
        const auto res = run_compare(cm);
        const double secs = seconds_since(t0);
        const ArchSpec arch;
        for (const auto& r : res) {
            if (r.layer_id != arch.bottleneck1()) continue;
            const bool ok = r.pearson >= 0.90 && r.mse <= 0.05 && secs <= 600.0;
            out.pass = out.pass && ok;
            out.detail += fmt::format("seed {}: pearson {:.3f} mse {:.3g} {:.0f}s; ", seed, r.pearson, r.mse, secs);
        }
        fs::remove_all(run);
    }
    return out;
}

// 2: epoch-80 loss ballpark
Outcome criterion2() {
    const auto t0 = Clock::now();
    const fs::path run = scratch("c2");
    TrainOptions tr;
    tr.mnist_dir = (source_dir() / "data" / "mnist").string();
    tr.run = run;
    tr.train.epochs = 80;
    tr.train.seed = 0;
    tr.checkpoint_every = 80;
    const TrainSummary s = run_train(tr);
    const double secs = seconds_since(t0);
    fs::remove_all(run);
    const double loss = s.losses.back();
    return {loss >= 0.02 && loss <= 0.06 && secs <= 1800.0,
            fmt::format("epoch 80 loss {:.4f} (target [0.02, 0.06]) in {:.0f}s", loss, secs)};
}

// 3: diffusion, translation, mass and positivity
Outcome criterion3() {
    std::string detail;
    bool pass = true;
    {
        const Grid2D g(-4, 4, -4, 4, 128, 128);
        const double nu = 0.05, s0 = 0.25;
        Density p = Density::gaussian(g, Vec2{}, s0);
        const DriftField f(g, std::vector<Vec2>(g.size()), std::vector<Vec2>(g.size(), Vec2{2 * nu, 2 * nu}));
        p = evolve_epoch(p, [&](double) { return f; }, substeps(100));
        const Moments m = moments(p);
        const double rel = std::max(std::abs(m.vx - (s0 + 2 * nu)), std::abs(m.vy - (s0 + 2 * nu))) / (s0 + 2 * nu);
        pass = pass && rel < 0.01;
        detail += fmt::format("variance rel err {:.2e}; ", rel);
    }
    {
        const Grid2D g(-3, 3, -3, 3, 96, 96);
        const double c = 0.4;
        Density p = Density::gaussian(g, Vec2{-0.5, 0.2}, 0.2);
        const Moments m0 = moments(p);
        const DriftField f(g, std::vector<Vec2>(g.size(), Vec2{c, 0}), std::vector<Vec2>(g.size()));
        p = evolve_epoch(p, [&](double) { return f; }, substeps(100));
        const double shift = moments(p).mx - m0.mx;
        pass = pass && std::abs(shift - c) < g.dx();
        detail += fmt::format("centroid shift {:.4f} vs {:.4f} (dx {:.3f}); ", shift, c, g.dx());
    }
    {
        const Grid2D g(-2, 2, -2, 2, 48, 48);
        const auto d = field(g, [](double x, double y) {
            return Vec2{0.8 * std::sin(kPi * x / 2) * (1 + 0.3 * y), 0.8 * std::sin(kPi * y / 2) * (1 - 0.2 * x)};
        });
        const auto s = field(g, [](double x, double) { return Vec2{0.004 + 0.002 * std::cos(x), 0.003}; });
        const DriftField f(g, d, s);
        Density p = Density::from_function(g, [](double x, double y) { return std::exp(-4 * (x - 0.7) * (x - 0.7) - 3 * y * y); });
        bool positive = true;
        for (int k = 0; k < 10000; ++k) {
            p = fp_step(p, f, substeps(100));
            for (double v : p.values()) positive = positive && v >= 0.0;
        }
        const double err = std::abs(p.mass() - 1.0);
        pass = pass && err < 1e-6 && positive;
        detail += fmt::format("mass err after 10000 steps {:.1e}; ", err);
    }
    {
        const Grid2D g(-1, 1, -1, 1, 24, 24);
        bool positive = true;
        for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            std::mt19937_64 rng(seed);
            std::vector<Vec2> d(g.size()), s(g.size());
            std::vector<double> v(g.size());
            for (std::size_t c = 0; c < g.size(); ++c) {
                d[c] = Vec2{normal01(rng), normal01(rng)};
                s[c] = Vec2{0.01 * uniform01(rng), 0.01 * uniform01(rng)};
                v[c] = uniform01(rng) < 0.2 ? 0.0 : uniform01(rng);
            }
            const double worst = cfl_ratios(DriftField(g, d, s), 0.01).worst();
            for (auto& x : d) x = Vec2{x.x * 0.999 / worst, x.y * 0.999 / worst};
            for (auto& x : s) x = Vec2{x.x * 0.999 / worst, x.y * 0.999 / worst};
            const DriftField f(g, d, s);
            Density q(g, v);
            q.normalize();
            for (int k = 0; k < 50; ++k) {
                q = fp_step(q, f, substeps(100));
                positive = positive && *std::min_element(q.values().begin(), q.values().end()) >= 0.0;
            }
        }
        pass = pass && positive;
        detail += positive ? "positivity held at the CFL limit" : "negative density at the CFL limit";
    }
    return {pass, detail};
}

// 4: V = -log P change of variables
Outcome criterion4() {
    const Grid2D g(-2, 2, -2, 2, 64, 64);
    struct Case {
        std::function<double(double, double)> p0;
        double c;
    };
    const std::vector<Case> cases{
        {[](double x, double y) { return (1 + 0.5 * std::cos(kPi * x / 2)) * (1 + 0.5 * std::cos(kPi * y / 2)); }, 0.05},
        {[](double x, double y) { return 1.2 + std::sin(kPi * x / 4) * std::cos(kPi * y / 4) + 0.3 * std::exp(-x * x - y * y); },
         0.08},
    };
    double worst = 0;
    for (const auto& cs : cases) {
        const Density p0 = Density::from_function(g, cs.p0);
        const auto d = field(g, [&](double x, double y) {
            return Vec2{cs.c * std::sin(kPi * x / 2) * (1 + 0.3 * y), cs.c * std::sin(kPi * y / 2) * (1 - 0.2 * x)};
        });
        const auto s = field(g, [](double x, double y) {
            return Vec2{0.01 + 0.004 * std::cos(kPi * x / 2), 0.012 - 0.003 * std::cos(kPi * y / 2)};
        });
        const DriftField f(g, d, s);
        const Density p1 = evolve_epoch(p0, [&](double) { return f; }, substeps(100));
        const PotentialField v1 = kpz_evolve_epoch(potential_from_density(p0), [&](double) { return f; }, substeps(100));
        worst = std::max(worst, max_abs(v1.values(), potential_from_density(p1).values()));
    }
    return {worst < 1e-3, fmt::format("max |V_kpz + log P_fp| = {:.2e} over one epoch", worst)};
}

// 5: Callan-Symanzik suite
Outcome criterion5() {
    std::string detail;
    bool pass = true;
    {
        const Grid2D g(-2, 2, -2, 2, 64, 64);
        const auto G = field(g, [](double x, double y) {
            return Vec2{0.3 * std::sin(kPi * x / 2) * (1 + 0.2 * y), 0.2 * std::sin(kPi * y / 2)};
        });
        Density p = Density::gaussian(g, Vec2{0.3, -0.2}, 0.4);
        p.set_time(1.0);
        const BetaField beta{g, G, 1.0};
        const auto cfg = substeps(1280);
        auto residual = [&](double span) {
            Density q = p;
            const int steps = static_cast<int>(std::lround(span * cfg.substeps_per_epoch));
            for (int k = 0; k < steps; ++k) {
                const double t = 1.0 + k * cfg.dt();
                auto d = G;
                for (auto& v : d) v = Vec2{v.x / t, v.y / t};
                q = fp_step(q, DriftField(g, d, std::vector<Vec2>(g.size())), cfg);
            }
            return cs_residual(p, q, beta, 1.0).l1;
        };
        const double r1 = residual(0.1), r2 = residual(0.05), r3 = residual(0.025);
        const double order = std::min(std::log2(r1 / r2), std::log2(r2 / r3));
        pass = pass && order >= 0.9;
        detail += fmt::format("(a) order {:.2f}; ", order);
    }
    {
        const Grid2D g(-2, 2, -1, 1, 128, 32);
        auto gx = [](double x) { return 0.2 + x * x; };
        const BetaField b{g, field(g, [&](double x, double) { return Vec2{gx(x), 0.0}; }), 1.0};
        const std::vector<Vec2> seeds{{-1.9, -0.5}, {-1.9, 0.0}, {-1.0, 0.7}};
        const auto curves = characteristic_solution(b, seeds, std::vector<double>{1, 1, 1}, 1000);
        double worst = 0;
        for (std::size_t c = 0; c < seeds.size(); ++c)
            for (const auto& pt : curves[c].points) {
                if (std::abs(gx(pt.w.x)) < 1e-3) continue;
                const double exact = gx(seeds[c].x) / gx(pt.w.x);
                worst = std::max(worst, std::abs(pt.p - exact) / exact);
            }
        pass = pass && worst < 1e-2;
        detail += fmt::format("(b) rel err {:.1e}; ", worst);
    }
    {
        const Grid2D g(-3, 3, -3, 3, 64, 64);
        const BetaField b{g, field(g, [](double x, double y) { return Vec2{x, y}; }), 1.0};
        const auto curves = characteristic_solution(b, std::vector<Vec2>{{0.3, 0.1}, {-0.2, -0.4}}, std::vector<double>{1.0, 2.0}, 2000);
        double worst = 0;
        for (std::size_t c = 0; c < 2; ++c)
            for (const auto& pt : curves[c].points)
                worst = std::max(worst, std::abs(pt.p - (c == 0 ? 1.0 : 2.0) * std::exp(-2 * pt.s)));
        pass = pass && worst < 1e-6;
        detail += fmt::format("(c) abs err {:.1e}; ", worst);
    }
    {
        const double tau = 2.0, threshold = 1e-6;
        std::vector<double> e, r;
        for (int k = 0; k < 10; ++k) {
            e.push_back(k);
            r.push_back(std::exp(-k / tau));
        }
        const Extrapolation x = extrapolate_crossing(e, r, threshold);
        const double exact = tau * std::log(1 / threshold);
        const double rel = x.crossing ? std::abs(*x.crossing - exact) / exact : 1.0;
        pass = pass && rel < 0.05;
        detail += fmt::format("(d) crossing rel err {:.1e}", rel);
    }
    return {pass, detail};
}

struct RefAdam {
    double b1 = 0.9, b2 = 0.999, eta = 1e-3, eps = 1e-8;
    double m = 0, v = 0, p1 = 1, p2 = 1;
    double step(double g) {
        p1 *= b1;
        p2 *= b2;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        return -eta * (m / (1 - p1)) / (eps + std::sqrt(v / (1 - p2)));
    }
};

// 6: oracle equivalences
Outcome criterion6() {
    std::string detail;
    bool pass = true;
    {
        AdamState s = AdamState::zeros(1, {});
        RefAdam ref;
        double w = 1.0, wr = 1.0, worst = 0;
        for (int k = 0; k < 100; ++k) {
            const auto st = adam_direction(std::vector<double>{2 * w}, s);
            s = st.state;
            w += st.update[0];
            wr += ref.step(2 * wr);
            worst = std::max(worst, std::abs(w - wr));
        }
        pass = pass && worst <= 1e-10;
        detail += fmt::format("adam {:.1e}; ", worst);
    }
    {
        ArchSpec a;
        a.input_dim = 4;
        a.encoder_hidden = {};
        a.decoder_hidden = {};
        a.activation = Activation::tanh;
        Network net = Network::initialize(a, 5);
        std::mt19937_64 rng(6);
        for (auto& l : net.layers) {
            for (double& x : l.w.data) x = 0.8 * normal01(rng);
            for (double& x : l.b) x = 0.3 * normal01(rng);
        }
        Matrix x(3, 4);
        for (double& v : x.data) v = uniform01(rng);
        const Gradients g = backward(net, x);
        double worst = 0;
        auto probe = [&](double& param, double analytic) {
            const double keep = param, h = 1e-6;
            param = keep + h;
            const double up = reconstruction_loss(net, x);
            param = keep - h;
            const double down = reconstruction_loss(net, x);
            param = keep;
            const double fd = (up - down) / (2 * h);
            worst = std::max(worst, std::abs(analytic - fd) / std::max({std::abs(analytic), std::abs(fd), 1e-6}));
        };
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            for (std::size_t k = 0; k < net.layers[l].w.data.size(); ++k) probe(net.layers[l].w.data[k], g.w[l].data[k]);
            for (std::size_t k = 0; k < net.layers[l].b.size(); ++k) probe(net.layers[l].b[k], g.b[l][k]);
        }
        pass = pass && worst < 1e-5;
        detail += fmt::format("backprop {:.1e}; ", worst);
    }
    {
        const Grid2D g(-3, 3, -2, 2, 40, 30);
        std::mt19937_64 rng(8);
        std::vector<Vec2> pts(150);
        for (auto& p : pts) p = Vec2{normal01(rng), 0.7 * normal01(rng)};
        const PointCloud cloud(pts);
        const Bandwidth bw{0.3, 0.2};
        const Density d = kde_estimate(cloud, g, bw);
        std::vector<double> brute(g.size());
        double mass = 0;
        for (int i = 0; i < g.nx(); ++i)
            for (int j = 0; j < g.ny(); ++j) {
                double s = 0;
                for (const auto& p : pts) {
                    const double u = (g.x(i) - p.x) / bw.hx, v = (g.y(j) - p.y) / bw.hy;
                    s += std::exp(-0.5 * (u * u + v * v)) / (2 * kPi * bw.hx * bw.hy);
                }
                brute[g.index(i, j)] = s;
                mass += s * g.cell_area();
            }
        for (double& v : brute) v /= mass;
        const double err = max_abs(d.values(), brute);
        pass = pass && err < 1e-12;
        detail += fmt::format("kde {:.1e}; ", err);
    }
    {
        std::mt19937_64 rng(9);
        Matrix e(300, 40), w1(40, 2), w2(2, 2);
        for (double& x : e.data) x = std::max(0.0, normal01(rng));
        for (double& x : w1.data) x = std::sqrt(0.5) * normal01(rng);
        for (double& x : w2.data) x = std::sqrt(0.5) * normal01(rng);
        auto rows = [](const Matrix& w) {
            std::vector<Vec2> r;
            for (int k = 0; k < w.rows; ++k) r.push_back(Vec2{w(k, 0), w(k, 1)});
            return r;
        };
        CompareConfig cfg;
        cfg.ensemble = 4;
        const auto res = compare_outputs(e, w1, w2, point_mass_rows(rows(w1)), point_mass_rows(rows(w2)), 2, 3, 0, cfg);
        double worst = 0;
        for (const auto& r : res) worst = std::max(worst, max_abs(r.empirical.values(), r.theoretical.values()));
        pass = pass && worst < 1e-9;
        detail += fmt::format("point mass {:.1e}", worst);
    }
    return {pass, detail};
}

std::map<std::string, std::string> snapshot_outputs(const fs::path& root) {
    std::map<std::string, std::string> files;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (!e.is_regular_file()) continue;
        const auto ext = e.path().extension().string();
        if (ext != ".json" && ext != ".csv" && ext != ".jsonl") continue;
        std::ifstream in(e.path(), std::ios::binary);
        std::ostringstream s;
        s << in.rdbuf();
        files[fs::relative(e.path(), root).string()] = s.str();
    }
    return files;
}

// 7: repeated CLI invocations are byte-identical
Outcome criterion7() {
    const char* cli = std::getenv("WF_CLI");
    if (!cli) return {false, "WF_CLI is not set"};
    const fs::path run = scratch("c7");
    const std::string mnist = (source_dir() / "data" / "mnist").string();
    const std::vector<std::pair<std::string, std::string>> commands{
        {"train", fmt::format("train --mnist-dir {} --run {} --epochs 3 --seed 11 --max-samples 400", mnist, run.string())},
        {"evolve", fmt::format("evolve --run {} --grid 32", run.string())},
        {"compare", fmt::format("compare --run {} --ensemble 4 --grid 32 --compare-samples 200 --no-images", run.string())},
        {"terminal", fmt::format("terminal --run {} --curve-seeds 4 --arc-steps 100", run.string())},
    };
    std::string detail;
    bool pass = true;
    for (const auto& [name, args] : commands) {
        std::map<std::string, std::string> first;
        for (int rep = 0; rep < 2; ++rep) {
            const int status = std::system(fmt::format("{} --log-level error {} >/dev/null 2>&1", cli, args).c_str());
            if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
                fs::remove_all(run);
                return {false, fmt::format("{} exited with status {}", name, status)};
            }
            if (rep == 0)
                first = snapshot_outputs(run);
            else {
                const auto second = snapshot_outputs(run);
                const bool same = first == second;
                pass = pass && same;
                detail += fmt::format("{} {} ({} files); ", name, same ? "identical" : "DIFFERS", second.size());
            }
        }
    }
    fs::remove_all(run);
    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_level(spdlog::level::warn);
    apply_thread_env();
    const std::vector<std::function<Outcome()>> criteria{criterion1, criterion2, criterion3, criterion4,
                                                         criterion5, criterion6, criterion7};
    std::set<int> wanted;
    for (int k = 1; k < argc; ++k) wanted.insert(std::atoi(argv[k]));
    int failures = 0;
    for (int k = 1; k <= static_cast<int>(criteria.size()); ++k) {
        if (!wanted.empty() && !wanted.count(k)) continue;
        const auto t0 = Clock::now();
        Outcome o;
        try {
            o = criteria[k - 1]();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        if (!o.pass) ++failures;
        std::printf("criterion %d %s [%.1fs] %s\n", k, o.pass ? "PASS" : "FAIL", seconds_since(t0), o.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
