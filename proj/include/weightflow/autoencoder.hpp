#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "weightflow/drift.hpp"
#include "weightflow/matrix.hpp"
#include "weightflow/mnist.hpp"

namespace weightflow {

enum class Activation { identity, relu, tanh, sigmoid };

Activation parse_activation(std::string_view name);
std::string_view to_string(Activation a);

// encoder_hidden -> bottleneck 1 (-> latent, linear, no bias) -> bottleneck 2
// (latent -> latent, linear, no bias) -> decoder_hidden -> input_dim.
struct ArchSpec {
    int input_dim = 784;
    std::vector<int> encoder_hidden{256, 200};
    int latent = 2;
    std::vector<int> decoder_hidden{256};
    Activation activation = Activation::relu;
    Activation output_activation = Activation::sigmoid;

    void validate() const;
    int bottleneck1() const { return static_cast<int>(encoder_hidden.size()); }
    int bottleneck2() const { return bottleneck1() + 1; }
    int layer_count() const { return static_cast<int>(encoder_hidden.size() + decoder_hidden.size()) + 3; }
};

// y = act(x W + b) with W stored in x out, so row k of W is the weight
// vector leaving input unit k. For the bottleneck layers those rows are the
// points in R^latent whose density we track.
struct DenseLayer {
    Matrix w;
    std::vector<double> b;
    bool has_bias = true;
    Activation act = Activation::identity;

    int in() const { return w.rows; }
    int out() const { return w.cols; }
};

struct Network {
    ArchSpec arch;
    std::vector<DenseLayer> layers;

    // Bottleneck weights i.i.d. N(0, 1/2); other weights N(0, gain^2 / fan_in)
    // with gain sqrt(2) for relu and 1 otherwise; biases zero.
    static Network initialize(const ArchSpec& arch, std::uint64_t seed);

    std::size_t parameter_count() const;
};

struct ForwardPass {
    std::vector<Matrix> post;  // post[0] is the input, post[l + 1] the output of layer l

    const Matrix& reconstruction() const { return post.back(); }
};

ForwardPass forward(const Network& net, const Matrix& batch);

// Latent outputs after bottleneck 1 and bottleneck 2.
struct Latents {
    Matrix bottleneck1;
    Matrix bottleneck2;
};
Latents latents(const Network& net, const ForwardPass& pass);

// Activations entering bottleneck 1 (n x encoder width).
Matrix encode(const Network& net, const Matrix& batch);

struct Gradients {
    std::vector<Matrix> w;
    std::vector<std::vector<double>> b;
    double loss = 0.0;
};

// Exact gradients of the mean (over batch and pixels) squared reconstruction error.
Gradients backward(const Network& net, const Matrix& batch, const ForwardPass& pass);
Gradients backward(const Network& net, const Matrix& batch);

double reconstruction_loss(const Network& net, const Matrix& batch);

// Mean loss over a dataset, evaluated in chunks.
double dataset_loss(const Network& net, const Dataset& data, std::size_t chunk = 512);

Matrix gather_batch(const Dataset& data, std::span<const std::size_t> indices);

struct TrainConfig {
    std::uint64_t seed = 0;
    int batch_size = 64;
    int epochs = 5;
    AdamHyper adam;

    void validate() const;
};

struct OptimizerState {
    std::vector<AdamState> w;
    std::vector<AdamState> b;

    static OptimizerState for_network(const Network& net, AdamHyper hyper);
};

struct WeightSnapshot {
    int epoch = 0;
    int layer_id = 0;
    Matrix matrix;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    double epoch_loss = 0.0;
};

WeightSnapshot snapshot(const Network& net, const OptimizerState& opt, int layer_id, int epoch, double loss);

struct EpochResult {
    double epoch_loss = 0.0;
    std::vector<WeightSnapshot> snapshots;        // bottleneck 1, bottleneck 2
    std::vector<RowUpdateSample> row_updates;     // net epoch displacement per bottleneck row
};

// One pass over `data` in the (seed, epoch) shuffle order, updating `net`
// and `opt` in place. `epoch` is 1 for the first pass.
EpochResult train_epoch(Network& net, const Dataset& data, const TrainConfig& cfg, OptimizerState& opt, int epoch);

}  // namespace weightflow
