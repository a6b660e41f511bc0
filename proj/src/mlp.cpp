#include "trd/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "trd/rng.hpp"

namespace trd {

void GradientBundle::add(const GradientBundle& other) {
    for (std::size_t l = 0; l < weight_grads.size(); ++l) {
        auto& dst = weight_grads[l].data;
        const auto& src = other.weight_grads[l].data;
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
        for (std::size_t i = 0; i < bias_grads[l].size(); ++i)
            bias_grads[l][i] += other.bias_grads[l][i];
    }
    for (std::size_t i = 0; i < input_grad.size(); ++i) input_grad[i] += other.input_grad[i];
}

void GradientBundle::scale(double factor) {
    for (auto& m : weight_grads)
        for (double& v : m.data) v *= factor;
    for (auto& b : bias_grads)
        for (double& v : b) v *= factor;
    for (double& v : input_grad) v *= factor;
}

bool GradientBundle::all_finite() const {
    for (const auto& m : weight_grads)
        for (double v : m.data)
            if (!std::isfinite(v)) return false;
    for (const auto& b : bias_grads)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    for (double v : input_grad)
        if (!std::isfinite(v)) return false;
    return true;
}

Mlp Mlp::init(const std::vector<int>& widths, std::uint64_t seed) {
    if (widths.size() < 2) throw std::invalid_argument("Mlp: need at least input and output widths");
    for (int wdt : widths)
        if (wdt < 1) throw std::invalid_argument("Mlp: layer widths must be positive");

    Mlp net;
    net.widths_ = widths;
    auto gen = rng::substream(seed, "mlp-init");
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const int fan_in = widths[l];
        const int fan_out = widths[l + 1];
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        std::uniform_real_distribution<double> dist(-bound, bound);
        Matrix w(fan_out, fan_in);
        for (double& v : w.data) v = dist(gen);
        std::vector<double> b(fan_out);
        for (double& v : b) v = dist(gen);
        net.weights_.push_back(std::move(w));
        net.biases_.push_back(std::move(b));
    }
    return net;
}

MlpForward Mlp::forward(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != input_dim())
        throw std::invalid_argument("Mlp: input dimension mismatch");

    MlpForward fwd;
    fwd.input = x;
    const std::vector<double>* in = &fwd.input;
    const int L = num_layers();
    fwd.pre.resize(L);
    fwd.post.resize(L);
    for (int l = 0; l < L; ++l) {
        const Matrix& w = weights_[l];
        std::vector<double> z(w.rows);
        for (int r = 0; r < w.rows; ++r) {
            double acc = biases_[l][r];
            const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
            for (int c = 0; c < w.cols; ++c) acc += row[c] * (*in)[c];
            z[r] = acc;
        }
        fwd.pre[l] = z;
        if (l + 1 < L) {
            for (double& v : z) v = v > 0.0 ? v : 0.0;
        }
        fwd.post[l] = std::move(z);
        in = &fwd.post[l];
    }
    return fwd;
}

MlpBackward Mlp::backward(const MlpForward& fwd, const std::vector<double>& upstream) const {
    if (static_cast<int>(upstream.size()) != output_dim())
        throw std::invalid_argument("Mlp: upstream gradient dimension mismatch");

    const int L = num_layers();
    MlpBackward bwd;
    bwd.grads = zero_grads();
    bwd.post_deltas.resize(L);

    std::vector<double> delta = upstream;  // identity output activation
    for (int l = L - 1; l >= 0; --l) {
        bwd.post_deltas[l] = delta;
        if (l + 1 < L) {
            // Pull back through the rectifier of this hidden layer.
            for (std::size_t i = 0; i < delta.size(); ++i)
                if (fwd.pre[l][i] <= 0.0) delta[i] = 0.0;
        }
        const std::vector<double>& in = (l == 0) ? fwd.input : fwd.post[l - 1];
        Matrix& dw = bwd.grads.weight_grads[l];
        for (int r = 0; r < dw.rows; ++r) {
            const double d = delta[r];
            bwd.grads.bias_grads[l][r] = d;
            if (d == 0.0) continue;
            double* row = &dw.data[static_cast<std::size_t>(r) * dw.cols];
            for (int c = 0; c < dw.cols; ++c) row[c] = d * in[c];
        }
        const Matrix& w = weights_[l];
        std::vector<double> prev(w.cols, 0.0);
        for (int r = 0; r < w.rows; ++r) {
            const double d = delta[r];
            if (d == 0.0) continue;
            const double* row = &w.data[static_cast<std::size_t>(r) * w.cols];
            for (int c = 0; c < w.cols; ++c) prev[c] += d * row[c];
        }
        delta = std::move(prev);
    }
    bwd.grads.input_grad = std::move(delta);
    if (!bwd.grads.all_finite()) throw std::runtime_error("Mlp: non-finite gradient");
    return bwd;
}

GradientBundle Mlp::zero_grads() const {
    GradientBundle g;
    for (int l = 0; l < num_layers(); ++l) {
        g.weight_grads.emplace_back(weights_[l].rows, weights_[l].cols);
        g.bias_grads.emplace_back(biases_[l].size(), 0.0);
    }
    g.input_grad.assign(input_dim(), 0.0);
    return g;
}

bool Mlp::all_finite() const {
    for (const auto& m : weights_)
        for (double v : m.data)
            if (!std::isfinite(v)) return false;
    for (const auto& b : biases_)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

Adam::Adam(const Mlp& shape, const AdamConfig& config) : config_(config) {
    for (const auto& w : shape.weights()) {
        m_w_.emplace_back(w.rows, w.cols);
        v_w_.emplace_back(w.rows, w.cols);
    }
    for (const auto& b : shape.biases()) {
        m_b_.emplace_back(b.size(), 0.0);
        v_b_.emplace_back(b.size(), 0.0);
    }
}

void Adam::step(Mlp& net, const GradientBundle& grads) {
    if (!grads.all_finite()) throw std::runtime_error("Adam: non-finite gradient");
    ++t_;
    const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));

    auto update = [&](double& param, double& m, double& v, double g) {
        m = config_.beta1 * m + (1.0 - config_.beta1) * g;
        v = config_.beta2 * v + (1.0 - config_.beta2) * g * g;
        const double m_hat = m / bc1;
        const double v_hat = v / bc2;
        param -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    };

    for (std::size_t l = 0; l < m_w_.size(); ++l) {
        auto& w = net.weights()[l].data;
        const auto& g = grads.weight_grads[l].data;
        for (std::size_t i = 0; i < w.size(); ++i) update(w[i], m_w_[l].data[i], v_w_[l].data[i], g[i]);
        auto& b = net.biases()[l];
        const auto& gb = grads.bias_grads[l];
        for (std::size_t i = 0; i < b.size(); ++i) update(b[i], m_b_[l][i], v_b_[l][i], gb[i]);
    }
    if (!net.all_finite()) throw std::runtime_error("Adam: parameters became non-finite");
}

}  // namespace trd
