#include "weightflow/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <omp.h>
#include <spdlog/spdlog.h>

#include "weightflow/error.hpp"
#include "weightflow/grid_io.hpp"
#include "weightflow/kde.hpp"
#include "weightflow/mnist.hpp"
#include "weightflow/potential.hpp"

namespace weightflow {

namespace {

std::vector<int> bottlenecks(const ArchSpec& a) { return {a.bottleneck1(), a.bottleneck2()}; }

json load_section(const RunLayout& run, const json& manifest, const char* name) {
    if (!manifest.contains(name))
        throw NotFound(fmt::format("run {} has no '{}' results; run that command first", run.root.string(), name));
    return manifest[name];
}

}  // namespace

void apply_thread_env() {
    const char* env = std::getenv("WEIGHTFLOW_THREADS");
    if (!env || !*env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (*end != '\0' || n < 1) throw InvalidInput(fmt::format("WEIGHTFLOW_THREADS must be a positive integer, got '{}'", env));
    omp_set_num_threads(static_cast<int>(n));
}

namespace {

// Everything a retrain invalidates; unrelated files in the run directory stay.
void clear_previous_run(const RunLayout& run) {
    for (const auto& entry : fs::directory_iterator(run.root)) {
        const std::string name = entry.path().filename().string();
        const bool epoch_dir = entry.is_directory() && name.size() == 9 && name.rfind("epoch_", 0) == 0 &&
                               std::all_of(name.begin() + 6, name.end(), [](char c) { return c >= '0' && c <= '9'; });
        if (epoch_dir) fs::remove_all(entry.path());
    }
    for (const auto& p : {run.evolve_dir(), run.compare_dir(), run.terminal_dir()}) fs::remove_all(p);
    fs::remove(run.row_updates());
}

}  // namespace

TrainSummary run_train(const TrainOptions& opt) {
    opt.train.validate();
    opt.arch.validate();
    if (opt.checkpoint_every < 1) throw InvalidInput("checkpoint interval must be >= 1");
    if (opt.run.empty()) throw InvalidInput("--run is required");

    const Dataset data = take_first(filter_digits(load_mnist_train(opt.mnist_dir), opt.digits), opt.max_samples);
    if (data.dim() != opt.arch.input_dim)
        throw InvalidInput(fmt::format("images have {} pixels, architecture expects {}", data.dim(), opt.arch.input_dim));
    spdlog::info("training on {} images, checksum {}", data.size(), data.checksum);

    const RunLayout run{opt.run};
    fs::create_directories(run.root);
    clear_previous_run(run);
    const TrainConfig& tc = opt.train;

    json section;
    section["tool"] = "weightflow";
    section["version"] = WEIGHTFLOW_VERSION;
    json config{{"epochs", tc.epochs},       {"batch_size", tc.batch_size}, {"eta", tc.adam.eta},
                {"beta1", tc.adam.beta1},    {"beta2", tc.adam.beta2},      {"eps", tc.adam.eps},
                {"max_samples", opt.max_samples}, {"checkpoint_every", opt.checkpoint_every}};
    section["config"] = config;
    section["config_digest"] = config_digest(json{{"config", config}, {"arch", to_json(opt.arch)}, {"seed", tc.seed}});
    section["seed"] = tc.seed;
    section["arch"] = to_json(opt.arch);
    section["mnist_dir"] = opt.mnist_dir;
    section["digits"] = opt.digits;
    section["data"] = json{{"count", data.size()}, {"checksum", data.checksum}};

    Network net = Network::initialize(opt.arch, tc.seed);
    OptimizerState state = OptimizerState::for_network(net, tc.adam);
    TrainSummary summary;
    summary.losses.push_back(dataset_loss(net, data));
    spdlog::info("epoch 0 loss {:.6f}", summary.losses.back());

    const auto layers = bottlenecks(opt.arch);
    std::vector<fs::path> written;
    std::vector<int> checkpoints;
    auto save = [&](int epoch, double loss) {
        for (int l : layers) {
            write_snapshot(run, snapshot(net, state, l, epoch, loss));
            for (const char* sfx : {"", "_adam_m", "_adam_v"}) written.push_back(run.layer_file(epoch, l, sfx));
        }
        if (epoch % opt.checkpoint_every == 0 || epoch == tc.epochs) {
            write_network(run, epoch, net);
            for (std::size_t l = 0; l < net.layers.size(); ++l) {
                if (std::find(layers.begin(), layers.end(), static_cast<int>(l)) == layers.end())
                    written.push_back(run.layer_file(epoch, static_cast<int>(l)));
                if (net.layers[l].has_bias) written.push_back(run.layer_file(epoch, static_cast<int>(l), "_bias"));
            }
            checkpoints.push_back(epoch);
        }
    };
    save(0, summary.losses[0]);

    std::string rows;
    for (int e = 1; e <= tc.epochs; ++e) {
        const EpochResult r = train_epoch(net, data, tc, state, e);
        summary.losses.push_back(r.epoch_loss);
        spdlog::info("epoch {} loss {:.6f}", e, r.epoch_loss);
        for (const auto& s : r.row_updates) rows += row_update_line(s) + "\n";
        save(e, r.epoch_loss);
    }
    write_text(run.row_updates(), rows);
    written.push_back(run.row_updates());

    section["losses"] = summary.losses;
    section["checkpoints"] = checkpoints;
    section["bottlenecks"] = layers;
    section["artifacts"] = json::object();
    std::sort(written.begin(), written.end());
    for (const auto& f : written) record_artifact(section, run, f);

    json manifest = json::object();
    manifest["train"] = section;
    store_manifest(run, manifest);
    return summary;
}

namespace {

EpochDriftSchedule schedule_from(const RunLayout& run, const json& train, const json& evolve_cfg, int layer,
                                 const Grid2D& grid) {
    const auto losses = train.at("losses").get<std::vector<double>>();
    const int epochs = train.at("config").at("epochs").get<int>();
    const double eta = train.at("config").at("eta").get<double>();
    const double eps = train.at("config").at("eps").get<double>();
    const double scale = evolve_cfg.at("sigma_scale").get<double>();
    std::optional<double> bw;
    if (!evolve_cfg.at("bandwidth").is_null()) bw = evolve_cfg.at("bandwidth").get<double>();

    EpochDriftSchedule schedule(grid, diffusion_coefficients(eta, eps, scale, grid));
    const auto all = read_row_updates(run.row_updates());
    for (int e = 1; e <= epochs; ++e) {
        std::vector<RowUpdateSample> samples;
        for (const auto& s : all)
            if (s.layer == layer && static_cast<int>(s.epoch_time) == e - 1) samples.push_back(s);
        if (samples.empty()) throw FormatError(fmt::format("no row updates for layer {} epoch {}", layer, e));
        double h;
        if (bw) {
            h = *bw;
        } else {
            std::vector<Vec2> pos;
            for (const auto& s : samples) pos.push_back(s.position);
            const double fb = std::max(grid.dx(), grid.dy());
            const Bandwidth b = scott_bandwidth(PointCloud(pos), Bandwidth{fb, fb});
            h = 0.5 * (b.hx + b.hy);
        }
        schedule.add_epoch(e - 1, samples, gate(losses[e - 1], losses[e]), h);
    }
    return schedule;
}

}  // namespace

EpochDriftSchedule drift_schedule(const RunLayout& run, const json& manifest, int layer, const Grid2D& grid) {
    return schedule_from(run, load_section(run, manifest, "train"),
                         load_section(run, manifest, "evolve").at("config"), layer, grid);
}

void run_evolve(const EvolveOptions& opt) {
    const RunLayout run{opt.run};
    json manifest = load_manifest(run);
    const json train = load_section(run, manifest, "train");
    const ArchSpec arch = arch_from_json(train.at("arch"));
    const int epochs = train.at("config").at("epochs").get<int>();
    const auto losses = train.at("losses").get<std::vector<double>>();
    if (opt.sigma_scale < 0.0) throw InvalidInput("sigma scale must be non-negative");
    if (!(opt.init_var > 0.0)) throw InvalidInput("initial variance must be positive");
    if (opt.bandwidth && !(*opt.bandwidth > 0.0)) throw InvalidInput("bandwidth must be positive");
    SolverConfig cfg;
    cfg.substeps_per_epoch = opt.substeps;
    cfg.validate();
    if (opt.grid_n < Grid2D::kMinCells) throw InvalidInput(fmt::format("grid must have at least {} cells per axis", Grid2D::kMinCells));

    json section;
    section["config"] = json{{"grid", opt.grid_n},
                             {"substeps", opt.substeps},
                             {"sigma_scale", opt.sigma_scale},
                             {"bandwidth", opt.bandwidth ? json(*opt.bandwidth) : json(nullptr)},
                             {"init_var", opt.init_var}};
    section["config_digest"] = config_digest(section["config"]);
    section["layers"] = json::object();
    section["artifacts"] = json::object();

    std::string log;
    std::vector<fs::path> written;
    for (int layer : bottlenecks(arch)) {
        std::vector<Vec2> pts;
        for (int e = 0; e <= epochs; ++e) {
            const Matrix w = read_snapshot(run, e, layer).matrix;
            for (int r = 0; r < w.rows; ++r) pts.push_back(Vec2{w(r, 0), w(r, 1)});
        }
        const double box = 3.5 * std::sqrt(opt.init_var);
        pts.push_back(Vec2{-box, -box});
        pts.push_back(Vec2{box, box});
        const Grid2D grid = Grid2D::enclosing(pts, opt.grid_n, opt.grid_n, 0.1);
        section["layers"][std::to_string(layer)] =
            json{{"x_min", grid.x_min()}, {"x_max", grid.x_max()}, {"y_min", grid.y_min()}, {"y_max", grid.y_max()},
                 {"nx", grid.nx()}, {"ny", grid.ny()}};
        const EpochDriftSchedule schedule = schedule_from(run, train, section["config"], layer, grid);

        Density p = Density::gaussian(grid, Vec2{0.0, 0.0}, opt.init_var, 0.0);
        write_density_csv(run.density_file(layer, 0), p);
        written.push_back(run.density_file(layer, 0));
        for (int e = 1; e <= epochs; ++e) {
            double worst = 0.0;
            const LossGate g = gate(losses[e - 1], losses[e]);
            p = evolve_epoch(
                p, [&](double t) { return schedule(t); }, cfg,
                [&](int k, const StepStats& st) {
                    worst = std::max(worst, st.cfl.worst());
                    json line{{"layer", layer},
                              {"epoch", e},
                              {"step", k},
                              {"gate", g.open},
                              {"mass_error", st.mass_after - 1.0},
                              {"max_density", st.max_density},
                              {"cfl_drift", st.cfl.drift},
                              {"cfl_diffusion", st.cfl.diffusion},
                              {"cfl_positivity", st.cfl.positivity},
                              {"renormalized", st.renormalized}};
                    log += line.dump() + "\n";
                });
            p.set_time(e);
            write_density_csv(run.density_file(layer, e), p);
            written.push_back(run.density_file(layer, e));
            spdlog::info("evolve layer {} epoch {}: gate {}, max cfl ratio {:.3f}, mass {:.12f}", layer, e,
                         g.open ? "open" : "closed", worst, p.mass());
        }
    }
    const fs::path log_path = run.evolve_dir() / "solver_log.jsonl";
    write_text(log_path, log);
    written.push_back(log_path);
    for (const auto& f : written) record_artifact(section, run, f);

    manifest["evolve"] = section;
    manifest.erase("compare");
    manifest.erase("terminal");
    store_manifest(run, manifest);
}

namespace {

struct CsvRow {
    double mse, pearson;
    int ensemble;
    std::uint64_t seed;
};

std::map<std::pair<int, int>, CsvRow> read_comparison_csv(const fs::path& path) {
    std::map<std::pair<int, int>, CsvRow> rows;
    if (!fs::exists(path)) return rows;
    std::istringstream in(read_text(path));
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        int epoch, layer, ensemble;
        unsigned long long seed;
        double mse, pearson;
        if (std::sscanf(line.c_str(), "%d,%d,%lf,%lf,%d,%llu", &epoch, &layer, &mse, &pearson, &ensemble, &seed) != 6)
            throw FormatError("malformed line in " + path.string() + ": " + line);
        rows[{epoch, layer}] = CsvRow{mse, pearson, ensemble, seed};
    }
    return rows;
}

Image panel(const Density& d, double vmax) {
    const int scale = 4;
    Image img = heatmap(d.grid(), d.values(), scale, vmax);
    overlay_arrows(img, score_field(potential_from_density(d)), scale, 4);
    return img;
}

}  // namespace

std::vector<ComparisonResult> run_compare(const CompareOptions& opt) {
    const RunLayout run{opt.run};
    json manifest = load_manifest(run);
    const json train = load_section(run, manifest, "train");
    load_section(run, manifest, "evolve");
    const int epochs = train.at("config").at("epochs").get<int>();

    CompareConfig cfg = opt.cfg;
    cfg.seed = opt.seed.value_or(train.at("seed").get<std::uint64_t>());
    std::vector<int> which = opt.epochs;
    if (which.empty())
        for (int e = 0; e <= epochs; ++e) which.push_back(e);
    for (int e : which)
        if (e < 0 || e > epochs) throw InvalidInput(fmt::format("epoch {} is outside 0..{}", e, epochs));

    json section = manifest.contains("compare") ? manifest["compare"] : json::object();
    section["config"] = json{{"ensemble", cfg.ensemble}, {"seed", cfg.seed}, {"grid", cfg.grid_n},
                             {"samples", cfg.samples},   {"bandwidth", cfg.bandwidth ? json(*cfg.bandwidth) : json(nullptr)}};
    if (!section.contains("artifacts")) section["artifacts"] = json::object();

    const fs::path csv_path = run.compare_dir() / "comparison.csv";
    auto table = read_comparison_csv(csv_path);
    std::vector<ComparisonResult> all;
    std::vector<fs::path> written;
    for (int e : which) {
        auto res = compare_epoch(run.root, e, cfg);
        for (auto& r : res) {
            table[{r.epoch, r.layer_id}] = CsvRow{r.mse, r.pearson, r.ensemble, r.seed};
            const std::string stem = fmt::format("epoch_{:03d}_layer_{}", r.epoch, r.layer_id);
            const fs::path emp = run.compare_dir() / (stem + "_empirical.csv");
            const fs::path th = run.compare_dir() / (stem + "_theory.csv");
            write_density_csv(emp, r.empirical);
            write_density_csv(th, r.theoretical);
            written.push_back(emp);
            written.push_back(th);
            if (opt.images) {
                const double vmax = std::max(*std::max_element(r.empirical.values().begin(), r.empirical.values().end()),
                                             *std::max_element(r.theoretical.values().begin(), r.theoretical.values().end()));
                const Image panels[] = {panel(r.empirical, vmax), panel(r.theoretical, vmax)};
                const fs::path img = run.compare_dir() / (stem + ".ppm");
                write_ppm(img, side_by_side(panels));
                written.push_back(img);
            }
            all.push_back(std::move(r));
        }
    }
    std::string csv = "epoch,layer,mse,pearson,ensemble,seed\n";
    for (const auto& [key, row] : table)
        csv += fmt::format("{},{},{:.17g},{:.17g},{},{}\n", key.first, key.second, row.mse, row.pearson, row.ensemble,
                           row.seed);
    write_text(csv_path, csv);
    written.push_back(csv_path);
    for (const auto& f : written) record_artifact(section, run, f);

    manifest["compare"] = section;
    store_manifest(run, manifest);
    return all;
}

namespace {

BetaField beta_at(const EpochDriftSchedule& s, double t) {
    if (t > 0.0) return beta_from_drift(s(t), t);
    return BetaField{s.grid(), std::vector<Vec2>(s.grid().size()), 0.0};
}

json residual_json(double epoch, const Residual& r) { return json{{"epoch", epoch}, {"l1", r.l1}, {"max", r.max_abs}}; }

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json run_terminal(const TerminalOptions& opt) {
    const RunLayout run{opt.run};
    json manifest = load_manifest(run);
    const json train = load_section(run, manifest, "train");
    load_section(run, manifest, "evolve");
    const ArchSpec arch = arch_from_json(train.at("arch"));
    const int epochs = train.at("config").at("epochs").get<int>();
    if (epochs < 2) throw InvalidInput("terminal analysis needs at least 3 epochs of density history (train >= 2 epochs)");
    if (opt.curve_seeds < 0 || opt.arc_steps < 0) throw InvalidInput("curve counts must be non-negative");

    json section;
    section["config"] = json{{"threshold", opt.threshold},
                             {"condition", opt.condition == TerminalCondition::stationary ? "stationary" : "scale_invariant"},
                             {"curve_seeds", opt.curve_seeds},
                             {"arc_steps", opt.arc_steps}};
    section["artifacts"] = json::object();
    json report = json::object();
    report["config"] = section["config"];
    report["layers"] = json::array();
    std::vector<fs::path> written;

    for (int layer : bottlenecks(arch)) {
        std::vector<Density> history;
        for (int e = 0; e <= epochs; ++e) history.push_back(read_density_csv(run.density_file(layer, e)));
        const Grid2D& grid = history.front().grid();
        const TerminalReport rep = terminal_detect(history, opt.threshold, opt.condition);
        const MassAudit audit = mass_audit(history);
        const EpochDriftSchedule schedule = drift_schedule(run, manifest, layer, grid);

        json lj;
        lj["layer"] = layer;
        lj["epochs"] = rep.epochs;
        lj["dpdt_l1"] = rep.dpdt_l1;
        lj["tdpdt_l1"] = rep.tdpdt_l1;
        lj["terminal"] = optional_json(rep.terminal);
        lj["terminal_stationary"] = optional_json(rep.terminal_stationary);
        lj["terminal_scale_invariant"] = optional_json(rep.terminal_scale_invariant);
        lj["triggered"] = rep.triggered();
        lj["fit"] = json{{"slope", rep.fit.slope}, {"intercept", rep.fit.intercept}, {"crossing", optional_json(rep.fit.crossing)}};
        lj["mass"] = json{{"masses", audit.masses}, {"max_deviation", audit.max_deviation}, {"flagged", audit.flagged}};

        json cs = json::array();
        for (int e = 1; e < epochs; ++e)
            cs.push_back(residual_json(e, cs_residual(history[e], history[e + 1], beta_at(schedule, e), e)));
        lj["cs_residual"] = cs;

        const int at = rep.terminal ? static_cast<int>(std::lround(*rep.terminal)) : epochs;
        const BetaField g = beta_at(schedule, at);
        lj["stationary"] = residual_json(at, stationary_residual(history[at], g));

        // seeds on a circle around the density's centre of mass
        const Density& p = history[at];
        double cx = 0.0, cy = 0.0;
        for (int i = 0; i < grid.nx(); ++i)
            for (int j = 0; j < grid.ny(); ++j) {
                cx += p(i, j) * grid.x(i) * grid.cell_area();
                cy += p(i, j) * grid.y(j) * grid.cell_area();
            }
        const double radius = 0.25 * std::min(grid.x_max() - grid.x_min(), grid.y_max() - grid.y_min());
        const double floor = default_floor(grid);
        std::string curves_csv = "curve_id,s,x1,x2,P\n";
        json curves = json::array();
        for (int c = 0; c < opt.curve_seeds; ++c) {
            const double ang = 2.0 * 3.141592653589793 * c / opt.curve_seeds;
            const Vec2 seed{cx + radius * std::cos(ang), cy + radius * std::sin(ang)};
            const double p0 = std::max(interpolate(grid, p.values(), seed), floor);
            json cj{{"id", c}, {"seed", {seed.x, seed.y}}, {"p0", p0}};
            try {
                const auto cv = characteristic_solution(g, std::span(&seed, 1), std::span(&p0, 1), opt.arc_steps);
                cj["status"] = cv[0].exited ? "exited" : "complete";
                cj["points"] = cv[0].points.size();
                for (const auto& q : cv[0].points)
                    curves_csv += fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g}\n", c, q.s, q.w.x, q.w.y, q.p);
            } catch (const StagnationError&) {
                cj["status"] = "stagnated";
                cj["points"] = 0;
            }
            curves.push_back(cj);
        }
        lj["curves"] = curves;
        const fs::path curves_path = run.terminal_dir() / fmt::format("layer_{}", layer) / "curves.csv";
        write_text(curves_path, curves_csv);
        written.push_back(curves_path);
        spdlog::info("terminal layer {}: T = {}, triggered {}, max mass deviation {:.3g}", layer,
                     rep.terminal ? fmt::format("{}", *rep.terminal) : std::string("none"), rep.triggered(),
                     audit.max_deviation);
        report["layers"].push_back(lj);
    }
    const fs::path report_path = run.terminal_dir() / "cs_report.json";
    write_text(report_path, report.dump(2) + "\n");
    written.push_back(report_path);
    for (const auto& f : written) record_artifact(section, run, f);
    manifest["terminal"] = section;
    store_manifest(run, manifest);
    return report;
}

}  // namespace weightflow
