#include "weightflow/comparison.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "weightflow/autoencoder.hpp"
#include "weightflow/error.hpp"
#include "weightflow/grid_io.hpp"
#include "weightflow/kernels.hpp"
#include "weightflow/metrics.hpp"
#include "weightflow/mnist.hpp"
#include "weightflow/rng.hpp"
#include "weightflow/run_dir.hpp"

namespace weightflow {

PointCloud sample_rows(const Density& p, std::size_t m, std::mt19937_64& rng) {
    if (m < 1) throw InvalidInput("sample_rows needs m >= 1");
    const double mass = p.mass();
    if (std::abs(mass - 1.0) > 1e-3) throw InvalidInput(fmt::format("density is not normalized (mass {})", mass));
    const Grid2D& g = p.grid();
    std::vector<double> cdf(g.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        acc += p.values()[k];
        cdf[k] = acc;
    }
    std::vector<Vec2> pts;
    pts.reserve(m);
    for (std::size_t n = 0; n < m; ++n) {
        const double u = uniform01(rng) * acc;
        auto k = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        k = std::min(k, g.size() - 1);
        while (p.values()[k] == 0.0 && k > 0) --k;  // u landed exactly on a plateau edge
        const int i = static_cast<int>(k / g.ny()), j = static_cast<int>(k % g.ny());
        const double jx = uniform01(rng), jy = uniform01(rng);
        pts.push_back(Vec2{g.x_min() + (i + jx) * g.dx(), g.y_min() + (j + jy) * g.dy()});
    }
    return PointCloud(std::move(pts));
}

PointCloud sample_rows(const Density& p, std::size_t m, std::uint64_t seed) {
    auto rng = substream(seed, "sample");
    return sample_rows(p, m, rng);
}

RowSource density_rows(const Density& p) {
    return [p](std::size_t m, std::mt19937_64& rng) {
        const auto cloud = sample_rows(p, m, rng);
        return std::vector<Vec2>(cloud.points().begin(), cloud.points().end());
    };
}

RowSource point_mass_rows(std::vector<Vec2> rows) {
    return [rows = std::move(rows)](std::size_t m, std::mt19937_64&) {
        if (m != rows.size()) throw InvalidInput(fmt::format("point-mass source holds {} rows, {} requested", rows.size(), m));
        return rows;
    };
}

Matrix rows_matrix(std::span<const Vec2> rows) {
    Matrix w(static_cast<int>(rows.size()), 2);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        w(static_cast<int>(k), 0) = rows[k].x;
        w(static_cast<int>(k), 1) = rows[k].y;
    }
    return w;
}

namespace {

PointCloud as_cloud(const Matrix& y) {
    std::vector<Vec2> pts(y.rows);
    for (int r = 0; r < y.rows; ++r) pts[r] = Vec2{y(r, 0), y(r, 1)};
    return PointCloud(std::move(pts));
}

}  // namespace

OutputClouds bottleneck_outputs(const Matrix& e, const Matrix& w1, const Matrix& w2) {
    if (w1.cols != 2 || w2.rows != 2 || w2.cols != 2) throw InvalidInput("bottleneck weights must map to 2 dimensions");
    if (e.cols != w1.rows) throw InvalidInput(fmt::format("encoder outputs have {} columns, bottleneck 1 expects {}", e.cols, w1.rows));
    for (double v : e.data)
        if (!std::isfinite(v)) throw InvalidInput("encoder outputs must be finite");
    Matrix y1, y2;
    kernels::gemm_nn(e, w1, y1);
    kernels::gemm_nn(y1, w2, y2);
    return OutputClouds{as_cloud(y1), as_cloud(y2)};
}

std::vector<OutputClouds> theoretical_outputs(const RowSource& rows1, const RowSource& rows2,
                                              const Matrix& encoder_outputs, std::size_t m2, int ensemble,
                                              std::uint64_t seed) {
    if (ensemble < 1) throw InvalidInput("ensemble must be >= 1");
    const auto m1 = static_cast<std::size_t>(encoder_outputs.cols);
    std::vector<Matrix> w1(ensemble), w2(ensemble);
    for (int k = 0; k < ensemble; ++k) {
        auto r1 = substream(seed, "theory1", static_cast<std::uint64_t>(k));
        auto r2 = substream(seed, "theory2", static_cast<std::uint64_t>(k));
        w1[k] = rows_matrix(rows1(m1, r1));
        w2[k] = rows_matrix(rows2(m2, r2));
    }
    std::vector<OutputClouds> out;
    out.reserve(ensemble);
    for (int k = 0; k < ensemble; ++k) out.push_back(bottleneck_outputs(encoder_outputs, w1[k], w2[k]));
    return out;
}

Density output_kde(const PointCloud& cloud, const Grid2D& grid, std::optional<double> bandwidth) {
    if (bandwidth) return kde_estimate(cloud, grid, Bandwidth{*bandwidth, *bandwidth});
    const double fb = std::max(grid.dx(), grid.dy());
    return kde_estimate(cloud, grid, scott_bandwidth(cloud, Bandwidth{fb, fb}));
}

namespace {

Density ensemble_mean(std::span<const OutputClouds> members, const Grid2D& grid, std::optional<double> bandwidth,
                      bool second) {
    std::vector<std::vector<double>> grids(members.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t k = 0; k < members.size(); ++k)
        grids[k] = output_kde(second ? members[k].bottleneck2 : members[k].bottleneck1, grid, bandwidth).values();
    std::vector<double> acc(grid.size(), 0.0);
    for (const auto& g : grids)
        for (std::size_t c = 0; c < acc.size(); ++c) acc[c] += g[c];
    Density d(grid, std::move(acc));
    d.normalize();
    return d;
}

}  // namespace

TheoryDensities theoretical_output_distribution(std::span<const OutputClouds> members, const Grid2D& grid1,
                                                const Grid2D& grid2, std::optional<double> bandwidth) {
    if (members.empty()) throw InvalidInput("no ensemble members");
    return TheoryDensities{ensemble_mean(members, grid1, bandwidth, false),
                           ensemble_mean(members, grid2, bandwidth, true)};
}

TheoryDensities theoretical_output_distribution(const Density& p1, const Density& p2, const Matrix& encoder_outputs,
                                                std::size_t m2, int ensemble, const Grid2D& grid1,
                                                const Grid2D& grid2, std::uint64_t seed,
                                                std::optional<double> bandwidth) {
    const auto members = theoretical_outputs(density_rows(p1), density_rows(p2), encoder_outputs, m2, ensemble, seed);
    return theoretical_output_distribution(members, grid1, grid2, bandwidth);
}

std::vector<ComparisonResult> compare_outputs(const Matrix& encoder_outputs, const Matrix& w1, const Matrix& w2,
                                              const RowSource& rows1, const RowSource& rows2, int layer1, int layer2,
                                              int epoch, const CompareConfig& cfg) {
    const OutputClouds empirical = bottleneck_outputs(encoder_outputs, w1, w2);
    const auto members = theoretical_outputs(rows1, rows2, encoder_outputs, static_cast<std::size_t>(w2.rows),
                                             cfg.ensemble, cfg.seed);
    auto shared_grid = [&](bool second) {
        std::vector<Vec2> all;
        auto add = [&](const PointCloud& c) { all.insert(all.end(), c.points().begin(), c.points().end()); };
        add(second ? empirical.bottleneck2 : empirical.bottleneck1);
        for (const auto& m : members) add(second ? m.bottleneck2 : m.bottleneck1);
        return Grid2D::enclosing(all, cfg.grid_n, cfg.grid_n, cfg.pad);
    };
    const Grid2D g1 = shared_grid(false), g2 = shared_grid(true);
    const TheoryDensities theory = theoretical_output_distribution(members, g1, g2, cfg.bandwidth);

    std::vector<ComparisonResult> out;
    auto score = [&](int layer, const PointCloud& emp, const Grid2D& g, const Density& th) {
        Density e = output_kde(emp, g, cfg.bandwidth);
        e.set_time(epoch);
        Density t = th;
        t.set_time(epoch);
        out.push_back(ComparisonResult{epoch, layer, grid_mse(e, t), grid_pearson(e, t), emp.size(), cfg.ensemble,
                                       cfg.seed, std::move(e), std::move(t)});
    };
    score(layer1, empirical.bottleneck1, g1, theory.bottleneck1);
    score(layer2, empirical.bottleneck2, g2, theory.bottleneck2);
    return out;
}

std::vector<ComparisonResult> compare_epoch(const std::filesystem::path& root, int epoch, const CompareConfig& cfg) {
    const RunLayout run{root};
    const json manifest = load_manifest(run);
    if (!manifest.contains("train")) throw NotFound("run has no training section");
    const json& train = manifest["train"];
    const ArchSpec arch = arch_from_json(train.at("arch"));
    const int b1 = arch.bottleneck1(), b2 = arch.bottleneck2();
    for (const auto& f : {run.layer_file(epoch, 0), run.density_file(b1, epoch), run.density_file(b2, epoch)})
        if (!fs::exists(f)) throw NotFound("missing artifact " + f.string());

    const Network net = read_network(run, epoch, arch);
    const Dataset all = load_mnist_train(train.at("mnist_dir").get<std::string>());
    const auto digits = train.at("digits").get<std::set<int>>();
    const Dataset data = take_first(filter_digits(all, digits), cfg.samples);
    std::vector<std::size_t> idx(data.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    const Matrix e = encode(net, gather_batch(data, idx));

    const Density p1 = read_density_csv(run.density_file(b1, epoch));
    const Density p2 = read_density_csv(run.density_file(b2, epoch));
    auto res = compare_outputs(e, net.layers[b1].w, net.layers[b2].w, density_rows(p1), density_rows(p2), b1, b2,
                               epoch, cfg);
    for (const auto& r : res)
        spdlog::info("compare epoch {} layer {}: mse {:.6g} pearson {:.4f}", r.epoch, r.layer_id, r.mse, r.pearson);
    return res;
}

}  // namespace weightflow
