#include "weightflow/drift.hpp"

#include <algorithm>
#include <cmath>

#include "weightflow/error.hpp"
#include "weightflow/kernels.hpp"

namespace weightflow {

AdamState AdamState::zeros(std::size_t n, AdamHyper hyper) {
    AdamState s;
    s.m.assign(n, 0.0);
    s.v.assign(n, 0.0);
    s.hyper = hyper;
    s.validate();
    return s;
}

void AdamState::validate() const {
    if (m.size() != v.size()) throw InvalidInput("adam moment sizes differ");
    if (step_count < 0) throw InvalidInput("adam step_count must be >= 0");
    if (!(hyper.beta1 > 0.0 && hyper.beta1 < 1.0) || !(hyper.beta2 > 0.0 && hyper.beta2 < 1.0))
        throw InvalidInput("adam betas must lie in (0, 1)");
    // eta = 0 is accepted as a frozen optimizer
    if (!(hyper.eta >= 0.0) || !(hyper.eps > 0.0)) throw InvalidInput("adam needs eta >= 0 and eps > 0");
    for (double x : v)
        if (!(x >= 0.0)) throw InvalidInput("adam second moment must be non-negative");
}

void adam_advance(AdamState& s, std::span<const double> g, std::span<double> update) {
    if (g.size() != s.m.size() || update.size() != s.m.size()) throw InvalidInput("adam gradient size mismatch");
    for (double x : g)
        if (!std::isfinite(x)) throw InvalidInput("adam gradient is not finite");
    const auto& h = s.hyper;
    const long t = s.step_count + 1;
    const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
    const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
    for (std::size_t k = 0; k < g.size(); ++k) {
        s.m[k] = h.beta1 * s.m[k] + (1.0 - h.beta1) * g[k];
        s.v[k] = h.beta2 * s.v[k] + (1.0 - h.beta2) * g[k] * g[k];
        const double m_hat = s.m[k] / c1;
        const double v_hat = s.v[k] / c2;
        update[k] = -h.eta * m_hat / (h.eps + std::sqrt(v_hat));
    }
    s.step_count = t;
}

AdamStep adam_direction(std::span<const double> gradient, const AdamState& state) {
    state.validate();
    AdamStep out{std::vector<double>(gradient.size()), state};
    adam_advance(out.state, gradient, out.update);
    return out;
}

LossGate gate(double prev_loss, double curr_loss) { return LossGate{prev_loss, curr_loss, curr_loss < prev_loss}; }

namespace {

std::vector<Vec2> regress(std::span<const Vec2> positions, std::span<const Vec2> updates, const Grid2D& grid,
                          double bandwidth, double factor) {
    std::vector<Vec2> num(grid.size());
    std::vector<double> den(grid.size());
    kernels::nadaraya_watson(positions, updates, grid, bandwidth, num, den);
    std::vector<Vec2> out(grid.size());
    for (std::size_t c = 0; c < out.size(); ++c) {
        if (den[c] < 1e-8) continue;
        out[c] = Vec2{factor * (num[c].x / den[c]), factor * (num[c].y / den[c])};
    }
    return out;
}

void check_samples(std::span<const RowUpdateSample> samples, double bandwidth) {
    if (samples.empty()) throw InvalidInput("drift_from_rows needs at least one sample");
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth)) throw InvalidInput("drift bandwidth must be positive");
    for (const auto& s : samples)
        if (!std::isfinite(s.position.x) || !std::isfinite(s.position.y) || !std::isfinite(s.update.x) ||
            !std::isfinite(s.update.y))
            throw InvalidInput("row update sample is not finite");
}

}  // namespace

DriftField drift_from_rows(std::span<const RowUpdateSample> samples, const LossGate& g, const Grid2D& grid,
                           double bandwidth) {
    check_samples(samples, bandwidth);
    if (!g.open) return DriftField::zero(grid);
    std::vector<Vec2> pos, upd;
    for (const auto& s : samples) {
        pos.push_back(s.position);
        upd.push_back(s.update);
    }
    return DriftField(grid, regress(pos, upd, grid, bandwidth, g.factor()), std::vector<Vec2>(grid.size()));
}

double diffusion_sigma2(double eta, double eps_adam, double scale) {
    if (!(eta > 0.0) || !(eps_adam > 0.0)) throw InvalidInput("diffusion needs eta > 0 and eps > 0");
    if (!(scale >= 0.0) || !std::isfinite(scale)) throw InvalidInput("sigma scale must be finite and >= 0");
    return scale * (eps_adam * eps_adam * eta * eta);
}

std::vector<Vec2> diffusion_coefficients(double eta, double eps_adam, double scale, const Grid2D& grid) {
    const double s = diffusion_sigma2(eta, eps_adam, scale);
    return std::vector<Vec2>(grid.size(), Vec2{s, s});
}

EpochDriftSchedule::EpochDriftSchedule(Grid2D grid, std::vector<Vec2> sigma2) : grid_(grid), sigma2_(std::move(sigma2)) {
    if (sigma2_.size() != grid_.size()) throw InvalidInput("sigma^2 field does not match grid");
}

void EpochDriftSchedule::add_epoch(int epoch, std::span<const RowUpdateSample> samples, const LossGate& g,
                                   double bandwidth) {
    check_samples(samples, bandwidth);
    Pair pair;
    if (!g.open) {
        pair.start.assign(grid_.size(), Vec2{});
        pair.end.assign(grid_.size(), Vec2{});
    } else {
        std::vector<Vec2> start, end, upd;
        for (const auto& s : samples) {
            start.push_back(s.position);
            end.push_back(Vec2{s.position.x + s.update.x, s.position.y + s.update.y});
            upd.push_back(s.update);
        }
        pair.start = regress(start, upd, grid_, bandwidth, 1.0);
        pair.end = regress(end, upd, grid_, bandwidth, 1.0);
    }
    epochs_[epoch] = std::move(pair);
}

DriftField EpochDriftSchedule::operator()(double t) const {
    int e = static_cast<int>(std::floor(t + 1e-9));
    auto it = epochs_.find(e);
    if (it == epochs_.end() && std::abs(t - e) <= 1e-9) it = epochs_.find(--e);  // end of the last epoch
    if (it == epochs_.end()) throw InvalidInput("no drift recorded for time " + std::to_string(t));
    const double tau = std::clamp(t - e, 0.0, 1.0);
    std::vector<Vec2> v(grid_.size());
    for (std::size_t c = 0; c < v.size(); ++c) {
        v[c].x = (1.0 - tau) * it->second.start[c].x + tau * it->second.end[c].x;
        v[c].y = (1.0 - tau) * it->second.start[c].y + tau * it->second.end[c].y;
    }
    return DriftField(grid_, std::move(v), sigma2_);
}

}  // namespace weightflow
