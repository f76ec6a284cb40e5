#include <cstdio>
#include <set>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "weightflow/error.hpp"
#include "weightflow/pipeline.hpp"

using namespace weightflow;

namespace {

constexpr int kUsage = 2;
constexpr int kNumeric = 3;

TerminalCondition parse_condition(const std::string& s) {
    if (s == "stationary") return TerminalCondition::stationary;
    if (s == "scale_invariant") return TerminalCondition::scale_invariant;
    throw InvalidInput("condition must be 'stationary' or 'scale_invariant'");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weightflow: bottleneck weight densities under a Fokker-Planck flow"};
    app.set_config("--config", "", "key = value config file; flags given on the command line win");
    app.require_subcommand(1);
    std::string log_level = "info";
    app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();

    TrainOptions train;
    std::string run_dir;
    std::string activation = "relu";
    std::uint64_t seed = 0;
    auto* t = app.add_subcommand("train", "train the autoencoder and write snapshots");
    t->add_option("--mnist-dir", train.mnist_dir, "directory holding the IDX training files")->capture_default_str();
    t->add_option("--run", run_dir, "run directory")->required();
    t->add_option("--epochs", train.train.epochs)->capture_default_str();
    t->add_option("--seed", seed)->capture_default_str();
    t->add_option("--batch-size", train.train.batch_size)->capture_default_str();
    t->add_option("--eta", train.train.adam.eta)->capture_default_str();
    t->add_option("--beta1", train.train.adam.beta1)->capture_default_str();
    t->add_option("--beta2", train.train.adam.beta2)->capture_default_str();
    t->add_option("--eps", train.train.adam.eps)->capture_default_str();
    t->add_option("--activation", activation, "relu, tanh, sigmoid or identity")->capture_default_str();
    t->add_option("--digits", train.digits, "labels to keep")->capture_default_str()->delimiter(',');
    t->add_option("--max-samples", train.max_samples, "keep the first N filtered images (0 = all)")->capture_default_str();
    t->add_option("--checkpoint-every", train.checkpoint_every, "write the full network every N epochs")
        ->capture_default_str();

    EvolveOptions evolve;
    double evolve_bw = 0.0;
    auto* ev = app.add_subcommand("evolve", "evolve the row densities with the drift learned in training");
    ev->add_option("--run", run_dir)->required();
    ev->add_option("--grid", evolve.grid_n, "cells per axis")->capture_default_str();
    ev->add_option("--substeps", evolve.substeps, "explicit steps per epoch")->capture_default_str();
    ev->add_option("--sigma-scale", evolve.sigma_scale, "multiplier on (eps * eta)^2")->capture_default_str();
    ev->add_option("--bandwidth", evolve_bw, "drift kernel width (default: Scott's rule)");

    CompareOptions compare;
    double kde_bw = 0.0;
    std::uint64_t compare_seed = 0;
    std::size_t compare_samples = compare.cfg.samples;
    auto* cm = app.add_subcommand("compare", "score empirical against theoretical output distributions");
    cm->add_option("--run", run_dir)->required();
    cm->add_option("--epochs", compare.epochs, "epochs to compare (default: all)")->delimiter(',');
    cm->add_option("--ensemble", compare.cfg.ensemble)->capture_default_str();
    auto* cseed = cm->add_option("--seed", compare_seed, "default: the training seed");
    cm->add_option("--grid", compare.cfg.grid_n)->capture_default_str();
    cm->add_option("--bandwidth", kde_bw, "KDE bandwidth (default: Scott's rule per cloud)");
    cm->add_option("--compare-samples", compare_samples, "images pushed through both sides")->capture_default_str();
    cm->add_flag("!--no-images", compare.images, "skip PPM output");

    TerminalOptions terminal;
    std::string condition = "stationary";
    auto* tm = app.add_subcommand("terminal", "terminal-time, mass and Callan-Symanzik diagnostics");
    tm->add_option("--run", run_dir)->required();
    tm->add_option("--threshold", terminal.threshold)->capture_default_str();
    tm->add_option("--condition", condition, "stationary or scale_invariant")->capture_default_str();
    tm->add_option("--curve-seeds", terminal.curve_seeds)->capture_default_str();
    tm->add_option("--arc-steps", terminal.arc_steps)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kUsage;
    }

    try {
        spdlog::set_level(spdlog::level::from_str(log_level));
        spdlog::set_pattern("[%l] %v");
        apply_thread_env();
        if (*t) {
            train.run = run_dir;
            train.train.seed = seed;
            train.arch.activation = parse_activation(activation);
            run_train(train);
        } else if (*ev) {
            evolve.run = run_dir;
            if (ev->count("--bandwidth")) evolve.bandwidth = evolve_bw;
            run_evolve(evolve);
        } else if (*cm) {
            compare.run = run_dir;
            if (*cseed) compare.seed = compare_seed;
            if (cm->count("--bandwidth")) compare.cfg.bandwidth = kde_bw;
            compare.cfg.samples = compare_samples;
            for (const auto& r : run_compare(compare))
                std::printf("epoch %d layer %d mse %.6g pearson %.4f\n", r.epoch, r.layer_id, r.mse, r.pearson);
        } else if (*tm) {
            terminal.run = run_dir;
            terminal.condition = parse_condition(condition);
            run_terminal(terminal);
        }
    } catch (const NumericError& e) {
        spdlog::error("{}", e.what());
        return kNumeric;
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    } catch (const std::filesystem::filesystem_error& e) {
        spdlog::error("{}", e.what());
        return kUsage;
    }
    return 0;
}
