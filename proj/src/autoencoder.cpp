#include "weightflow/autoencoder.hpp"

#include <cmath>

#include "weightflow/error.hpp"
#include "weightflow/kernels.hpp"
#include "weightflow/rng.hpp"

namespace weightflow {

Activation parse_activation(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw InvalidInput("unknown activation '" + std::string(name) + "'");
}

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "?";
}

void ArchSpec::validate() const {
    if (input_dim < 1 || latent < 1) throw InvalidInput("arch dimensions must be positive");
    for (int w : encoder_hidden)
        if (w < 1) throw InvalidInput("encoder widths must be positive");
    for (int w : decoder_hidden)
        if (w < 1) throw InvalidInput("decoder widths must be positive");
}

namespace {

void apply(Activation a, Matrix& m) {
    switch (a) {
        case Activation::identity: break;
        case Activation::relu:
            for (double& x : m.data) x = x > 0.0 ? x : 0.0;
            break;
        case Activation::tanh:
            for (double& x : m.data) x = std::tanh(x);
            break;
        case Activation::sigmoid:
            for (double& x : m.data) x = 1.0 / (1.0 + std::exp(-x));
            break;
    }
}

// Multiplies `delta` by the activation derivative written in terms of the output y.
void chain(Activation a, const Matrix& y, Matrix& delta) {
    switch (a) {
        case Activation::identity: break;
        case Activation::relu:
            for (std::size_t k = 0; k < delta.data.size(); ++k)
                if (!(y.data[k] > 0.0)) delta.data[k] = 0.0;
            break;
        case Activation::tanh:
            for (std::size_t k = 0; k < delta.data.size(); ++k) delta.data[k] *= 1.0 - y.data[k] * y.data[k];
            break;
        case Activation::sigmoid:
            for (std::size_t k = 0; k < delta.data.size(); ++k) delta.data[k] *= y.data[k] * (1.0 - y.data[k]);
            break;
    }
}

}  // namespace

Network Network::initialize(const ArchSpec& arch, std::uint64_t seed) {
    arch.validate();
    Network net;
    net.arch = arch;
    std::vector<int> widths{arch.input_dim};
    widths.insert(widths.end(), arch.encoder_hidden.begin(), arch.encoder_hidden.end());
    widths.push_back(arch.latent);
    widths.push_back(arch.latent);
    widths.insert(widths.end(), arch.decoder_hidden.begin(), arch.decoder_hidden.end());
    widths.push_back(arch.input_dim);

    const int n_layers = static_cast<int>(widths.size()) - 1;
    for (int l = 0; l < n_layers; ++l) {
        DenseLayer layer;
        layer.w = Matrix(widths[l], widths[l + 1]);
        const bool bottleneck = l == arch.bottleneck1() || l == arch.bottleneck2();
        layer.has_bias = !bottleneck;
        layer.b.assign(layer.has_bias ? widths[l + 1] : 0, 0.0);
        if (bottleneck)
            layer.act = Activation::identity;
        else if (l == n_layers - 1)
            layer.act = arch.output_activation;
        else
            layer.act = arch.activation;

        double stddev = std::sqrt(0.5);
        if (!bottleneck) {
            const double gain = layer.act == Activation::relu ? std::sqrt(2.0) : 1.0;
            stddev = gain / std::sqrt(static_cast<double>(widths[l]));
        }
        auto rng = substream(seed, "init", static_cast<std::uint64_t>(l));
        for (double& x : layer.w.data) x = stddev * normal01(rng);
        net.layers.push_back(std::move(layer));
    }
    return net;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += l.w.size() + l.b.size();
    return n;
}

ForwardPass forward(const Network& net, const Matrix& batch) {
    if (batch.cols != net.arch.input_dim)
        throw InvalidInput("batch has " + std::to_string(batch.cols) + " columns, network expects " +
                           std::to_string(net.arch.input_dim));
    ForwardPass pass;
    pass.post.reserve(net.layers.size() + 1);
    pass.post.push_back(batch);
    for (const auto& layer : net.layers) {
        Matrix z;
        kernels::gemm_nn(pass.post.back(), layer.w, z);
        if (layer.has_bias)
            for (int r = 0; r < z.rows; ++r) {
                auto row = z.row(r);
                for (int c = 0; c < z.cols; ++c) row[c] += layer.b[c];
            }
        apply(layer.act, z);
        pass.post.push_back(std::move(z));
    }
    return pass;
}

Latents latents(const Network& net, const ForwardPass& pass) {
    return Latents{pass.post[net.arch.bottleneck1() + 1], pass.post[net.arch.bottleneck2() + 1]};
}

Matrix encode(const Network& net, const Matrix& batch) {
    if (batch.cols != net.arch.input_dim) throw InvalidInput("batch width does not match network input");
    Matrix cur = batch;
    for (int l = 0; l < net.arch.bottleneck1(); ++l) {
        const auto& layer = net.layers[l];
        Matrix z;
        kernels::gemm_nn(cur, layer.w, z);
        if (layer.has_bias)
            for (int r = 0; r < z.rows; ++r) {
                auto row = z.row(r);
                for (int c = 0; c < z.cols; ++c) row[c] += layer.b[c];
            }
        apply(layer.act, z);
        cur = std::move(z);
    }
    return cur;
}

Gradients backward(const Network& net, const Matrix& batch, const ForwardPass& pass) {
    if (pass.post.size() != net.layers.size() + 1 || !(pass.post.front() == batch))
        throw InvalidInput("forward pass does not belong to this batch");
    const Matrix& out = pass.reconstruction();
    const double scale = 2.0 / static_cast<double>(out.size());
    Gradients g;
    g.w.resize(net.layers.size());
    g.b.resize(net.layers.size());

    Matrix delta(out.rows, out.cols);
    double loss = 0.0;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        const double r = out.data[k] - batch.data[k];
        loss += r * r;
        delta.data[k] = scale * r;
    }
    g.loss = loss / static_cast<double>(out.size());

    for (int l = static_cast<int>(net.layers.size()) - 1; l >= 0; --l) {
        const auto& layer = net.layers[l];
        chain(layer.act, pass.post[l + 1], delta);
        kernels::gemm_tn(pass.post[l], delta, g.w[l]);
        if (layer.has_bias) {
            g.b[l].assign(layer.out(), 0.0);
            for (int r = 0; r < delta.rows; ++r) {
                const auto row = delta.row(r);
                for (int c = 0; c < delta.cols; ++c) g.b[l][c] += row[c];
            }
        }
        if (l > 0) {
            Matrix prev;
            kernels::gemm_nt(delta, layer.w, prev);
            delta = std::move(prev);
        }
    }
    return g;
}

Gradients backward(const Network& net, const Matrix& batch) { return backward(net, batch, forward(net, batch)); }

double reconstruction_loss(const Network& net, const Matrix& batch) {
    const auto pass = forward(net, batch);
    const Matrix& out = pass.reconstruction();
    double loss = 0.0;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
        const double r = out.data[k] - batch.data[k];
        loss += r * r;
    }
    return loss / static_cast<double>(out.size());
}

Matrix gather_batch(const Dataset& data, std::span<const std::size_t> indices) {
    Matrix m(static_cast<int>(indices.size()), data.dim());
    for (std::size_t r = 0; r < indices.size(); ++r) {
        const auto im = data.image(indices[r]);
        std::copy(im.begin(), im.end(), m.row(static_cast<int>(r)).begin());
    }
    return m;
}

double dataset_loss(const Network& net, const Dataset& data, std::size_t chunk) {
    if (data.size() == 0) throw InvalidInput("dataset is empty");
    double total = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < data.size(); start += chunk) {
        idx.clear();
        for (std::size_t k = start; k < std::min(data.size(), start + chunk); ++k) idx.push_back(k);
        total += reconstruction_loss(net, gather_batch(data, idx)) * static_cast<double>(idx.size());
    }
    return total / static_cast<double>(data.size());
}

void TrainConfig::validate() const {
    if (epochs < 1) throw InvalidInput("epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("batch_size must be >= 1");
}

OptimizerState OptimizerState::for_network(const Network& net, AdamHyper hyper) {
    OptimizerState s;
    for (const auto& l : net.layers) {
        s.w.push_back(AdamState::zeros(l.w.size(), hyper));
        s.b.push_back(AdamState::zeros(l.b.size(), hyper));
    }
    return s;
}

WeightSnapshot snapshot(const Network& net, const OptimizerState& opt, int layer_id, int epoch, double loss) {
    return WeightSnapshot{epoch, layer_id, net.layers[layer_id].w, opt.w[layer_id].m, opt.w[layer_id].v, loss};
}

EpochResult train_epoch(Network& net, const Dataset& data, const TrainConfig& cfg, OptimizerState& opt, int epoch) {
    cfg.validate();
    if (data.size() == 0) throw InvalidInput("training data is empty");
    if (data.dim() != net.arch.input_dim) throw InvalidInput("data width does not match network input");

    const int b1 = net.arch.bottleneck1(), b2 = net.arch.bottleneck2();
    const Matrix start1 = net.layers[b1].w, start2 = net.layers[b2].w;
    Matrix moved1(start1.rows, start1.cols), moved2(start2.rows, start2.cols);

    std::vector<double> update;
    double loss_sum = 0.0;
    for (const auto& idx : batches(data.size(), static_cast<std::size_t>(cfg.batch_size), cfg.seed, epoch)) {
        const Matrix batch = gather_batch(data, idx);
        const Gradients g = backward(net, batch);
        if (!std::isfinite(g.loss)) throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
        loss_sum += g.loss * static_cast<double>(idx.size());
        for (std::size_t l = 0; l < net.layers.size(); ++l) {
            auto& layer = net.layers[l];
            update.resize(layer.w.size());
            adam_advance(opt.w[l], g.w[l].data, update);
            for (std::size_t k = 0; k < update.size(); ++k) layer.w.data[k] += update[k];
            if (static_cast<int>(l) == b1)
                for (std::size_t k = 0; k < update.size(); ++k) moved1.data[k] += update[k];
            if (static_cast<int>(l) == b2)
                for (std::size_t k = 0; k < update.size(); ++k) moved2.data[k] += update[k];
            if (layer.has_bias) {
                update.resize(layer.b.size());
                adam_advance(opt.b[l], g.b[l], update);
                for (std::size_t k = 0; k < update.size(); ++k) layer.b[k] += update[k];
            }
        }
    }

    EpochResult res;
    res.epoch_loss = loss_sum / static_cast<double>(data.size());
    res.snapshots.push_back(snapshot(net, opt, b1, epoch, res.epoch_loss));
    res.snapshots.push_back(snapshot(net, opt, b2, epoch, res.epoch_loss));
    auto emit = [&](const Matrix& start, const Matrix& moved, int layer) {
        for (int r = 0; r < start.rows; ++r)
            res.row_updates.push_back(RowUpdateSample{Vec2{start(r, 0), start(r, 1)}, Vec2{moved(r, 0), moved(r, 1)},
                                                      static_cast<double>(epoch - 1), layer, r});
    };
    if (net.arch.latent == 2) {
        emit(start1, moved1, b1);
        emit(start2, moved2, b2);
    }
    return res;
}

}  // namespace weightflow
