#pragma once

// Central finite-difference oracle for the analytic MLP gradients. The loss
// is the upstream-weighted sum of outputs; coordinates whose perturbation
// flips a rectifier sign are skipped since the derivative is undefined
// across the kink.

#include <cmath>
#include <random>
#include <vector>

#include "trd/mlp.hpp"

namespace trd::testsupport {

struct GradCheckResult {
    double max_rel_err = 0.0;
    int checked = 0;
    int skipped = 0;
};

namespace detail {

inline double projected_loss(const Mlp& net, const std::vector<double>& x,
                             const std::vector<double>& upstream) {
    const auto out = net.forward(x).output();
    double loss = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) loss += upstream[i] * out[i];
    return loss;
}

inline std::vector<bool> activation_pattern(const Mlp& net, const std::vector<double>& x) {
    const MlpForward fwd = net.forward(x);
    std::vector<bool> pattern;
    for (int l = 0; l + 1 < net.num_layers(); ++l)
        for (double pre : fwd.pre[l]) pattern.push_back(pre > 0.0);
    return pattern;
}

inline void compare(double analytic, double fd, GradCheckResult& result) {
    const double scale = std::max(std::abs(analytic), std::abs(fd));
    if (scale < 1e-6) {
        ++result.checked;
        return;
    }
    result.max_rel_err = std::max(result.max_rel_err, std::abs(analytic - fd) / scale);
    ++result.checked;
}

}  // namespace detail

// Checks `coord_samples` randomly chosen parameter coordinates plus every
// input coordinate against central differences at the given epsilon.
inline GradCheckResult check_gradients(Mlp& net, const std::vector<double>& x,
                                       const std::vector<double>& upstream,
                                       int coord_samples, std::mt19937_64& gen,
                                       double epsilon = 1e-5) {
    GradCheckResult result;
    const MlpForward fwd = net.forward(x);
    const GradientBundle analytic = net.backward(fwd, upstream).grads;

    auto fd_at = [&](double& coord, double analytic_grad) {
        const double saved = coord;
        coord = saved + epsilon;
        const double loss_hi = detail::projected_loss(net, x, upstream);
        const auto pattern_hi = detail::activation_pattern(net, x);
        coord = saved - epsilon;
        const double loss_lo = detail::projected_loss(net, x, upstream);
        const auto pattern_lo = detail::activation_pattern(net, x);
        coord = saved;
        if (pattern_hi != pattern_lo) {
            ++result.skipped;
            return;
        }
        detail::compare(analytic_grad, (loss_hi - loss_lo) / (2.0 * epsilon), result);
    };

    std::uniform_int_distribution<int> pick_layer(0, net.num_layers() - 1);
    for (int s = 0; s < coord_samples; ++s) {
        const int l = pick_layer(gen);
        auto& w = net.weights()[l];
        std::uniform_int_distribution<std::size_t> pick(0, w.data.size() - 1);
        const std::size_t i = pick(gen);
        fd_at(w.data[i], analytic.weight_grads[l].data[i]);
    }
    for (int l = 0; l < net.num_layers(); ++l) {
        auto& b = net.biases()[l];
        std::uniform_int_distribution<std::size_t> pick(0, b.size() - 1);
        const std::size_t i = pick(gen);
        fd_at(b[i], analytic.bias_grads[l][i]);
    }

    // Input gradient: perturb the observation itself.
    std::vector<double> probe = x;
    for (std::size_t d = 0; d < probe.size(); ++d) {
        const double saved = probe[d];
        probe[d] = saved + epsilon;
        const double loss_hi = detail::projected_loss(net, probe, upstream);
        const auto pattern_hi = detail::activation_pattern(net, probe);
        probe[d] = saved - epsilon;
        const double loss_lo = detail::projected_loss(net, probe, upstream);
        const auto pattern_lo = detail::activation_pattern(net, probe);
        probe[d] = saved;
        if (pattern_hi != pattern_lo) {
            ++result.skipped;
            continue;
        }
        detail::compare(analytic.input_grad[d], (loss_hi - loss_lo) / (2.0 * epsilon), result);
    }
    return result;
}

}  // namespace trd::testsupport
