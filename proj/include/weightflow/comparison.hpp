#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "weightflow/grid.hpp"
#include "weightflow/kde.hpp"
#include "weightflow/matrix.hpp"

namespace weightflow {

// m i.i.d. draws: a cell chosen with probability proportional to its mass,
// then a uniform point inside it. Throws InvalidInput if |mass - 1| > 1e-3.
PointCloud sample_rows(const Density& p, std::size_t m, std::mt19937_64& rng);
PointCloud sample_rows(const Density& p, std::size_t m, std::uint64_t seed);

// Supplies the m rows of one theory weight matrix.
using RowSource = std::function<std::vector<Vec2>(std::size_t m, std::mt19937_64& rng)>;

RowSource density_rows(const Density& p);
// Row k is always rows[k]; the product of point masses at a fixed matrix.
RowSource point_mass_rows(std::vector<Vec2> rows);

// Rows as an (m x 2) matrix.
Matrix rows_matrix(std::span<const Vec2> rows);

// Bottleneck outputs E W1 and E W1 W2 for encoder outputs E (n x m1).
struct OutputClouds {
    PointCloud bottleneck1;
    PointCloud bottleneck2;
};
OutputClouds bottleneck_outputs(const Matrix& encoder_outputs, const Matrix& w1, const Matrix& w2);

// One OutputClouds per ensemble member; member k draws from substreams
// ("theory1", k) and ("theory2", k) of `seed`.
std::vector<OutputClouds> theoretical_outputs(const RowSource& rows1, const RowSource& rows2,
                                              const Matrix& encoder_outputs, std::size_t m2, int ensemble,
                                              std::uint64_t seed);

// KDE of a cloud with Scott's rule unless `bandwidth` is given.
Density output_kde(const PointCloud& cloud, const Grid2D& grid, std::optional<double> bandwidth);

// Ensemble mean of the members' KDEs, renormalized.
struct TheoryDensities {
    Density bottleneck1;
    Density bottleneck2;
};
TheoryDensities theoretical_output_distribution(std::span<const OutputClouds> members, const Grid2D& grid1,
                                                const Grid2D& grid2, std::optional<double> bandwidth);
TheoryDensities theoretical_output_distribution(const Density& p1, const Density& p2, const Matrix& encoder_outputs,
                                                std::size_t m2, int ensemble, const Grid2D& grid1,
                                                const Grid2D& grid2, std::uint64_t seed,
                                                std::optional<double> bandwidth = std::nullopt);

struct CompareConfig {
    int ensemble = 16;
    std::uint64_t seed = 0;
    int grid_n = 64;
    std::size_t samples = 2000;  // leading filtered samples pushed through both sides
    std::optional<double> bandwidth;
    double pad = 0.1;
};

struct ComparisonResult {
    int epoch = 0;
    int layer_id = 0;
    double mse = 0.0;
    double pearson = 0.0;
    std::size_t sample_count = 0;
    int ensemble = 0;
    std::uint64_t seed = 0;
    Density empirical;
    Density theoretical;
};

// Scores for both bottlenecks given the encoder outputs, the trained
// bottleneck weights and the row sources of the theory side.
std::vector<ComparisonResult> compare_outputs(const Matrix& encoder_outputs, const Matrix& w1, const Matrix& w2,
                                              const RowSource& rows1, const RowSource& rows2, int layer1, int layer2,
                                              int epoch, const CompareConfig& cfg);

// Loads the snapshot and evolved densities for `epoch` from a run directory.
// Throws NotFound when an artifact is missing.
std::vector<ComparisonResult> compare_epoch(const std::filesystem::path& run, int epoch, const CompareConfig& cfg);

}  // namespace weightflow
