#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "weightflow/autoencoder.hpp"
#include "weightflow/callan_symanzik.hpp"
#include "weightflow/comparison.hpp"
#include "weightflow/run_dir.hpp"

namespace weightflow {

struct TrainOptions {
    std::string mnist_dir = "data/mnist";
    std::filesystem::path run;
    TrainConfig train;
    ArchSpec arch;
    std::set<int> digits{0, 1, 2, 3, 4, 5};
    std::size_t max_samples = 0;  // 0 keeps every filtered sample
    int checkpoint_every = 1;     // full network every N epochs (bottlenecks always)
};

struct EvolveOptions {
    std::filesystem::path run;
    int grid_n = 64;
    int substeps = 100;
    double sigma_scale = 1.0;
    std::optional<double> bandwidth;  // drift kernel width; Scott's rule on the row positions if unset
    double init_var = 0.5;
};

struct CompareOptions {
    std::filesystem::path run;
    std::vector<int> epochs;  // empty: every evolved epoch
    CompareConfig cfg;
    std::optional<std::uint64_t> seed;  // defaults to the training seed
    bool images = true;
};

struct TerminalOptions {
    std::filesystem::path run;
    double threshold = 1e-3;
    TerminalCondition condition = TerminalCondition::stationary;
    int curve_seeds = 8;
    int arc_steps = 400;
};

struct TrainSummary {
    std::vector<double> losses;  // losses[0] is the loss before any update
};

TrainSummary run_train(const TrainOptions& opt);
void run_evolve(const EvolveOptions& opt);
std::vector<ComparisonResult> run_compare(const CompareOptions& opt);
nlohmann::ordered_json run_terminal(const TerminalOptions& opt);

// Rebuilds the drift schedule of one bottleneck layer from the training
// artifacts and the evolve settings stored in the manifest.
EpochDriftSchedule drift_schedule(const RunLayout& run, const nlohmann::ordered_json& manifest, int layer,
                                  const Grid2D& grid);

// Sets the OpenMP thread count from WEIGHTFLOW_THREADS when present.
void apply_thread_env();

}  // namespace weightflow
