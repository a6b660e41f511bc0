#pragma once

#include <cstdint>
#include <vector>

namespace trd {

struct Matrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(int r, int c) : rows(r), cols(c), data(static_cast<std::size_t>(r) * c, 0.0) {}

    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }
    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
};

// Gradients mirroring an Mlp's parameters, plus the gradient with respect to
// the input features (the carrier for saliency and training).
struct GradientBundle {
    std::vector<Matrix> weight_grads;
    std::vector<std::vector<double>> bias_grads;
    std::vector<double> input_grad;

    void add(const GradientBundle& other);
    void scale(double factor);
    bool all_finite() const;
};

struct MlpForward {
    std::vector<double> input;
    std::vector<std::vector<double>> pre;   // per layer, before activation
    std::vector<std::vector<double>> post;  // per layer, after activation

    const std::vector<double>& output() const { return post.back(); }
};

struct MlpBackward {
    GradientBundle grads;
    // dLoss/d(post-activation) per layer; index 0 is the first hidden layer.
    std::vector<std::vector<double>> post_deltas;
};

// Fully connected net: rectifier hidden layers, identity output. Weights and
// the analytic forward/backward are explicit so gradients are available for
// both training and input attribution.
class Mlp {
  public:
    Mlp() = default;
    // widths = {input, hidden..., output}; fan-in-scaled uniform init.
    static Mlp init(const std::vector<int>& widths, std::uint64_t seed);

    MlpForward forward(const std::vector<double>& x) const;
    MlpBackward backward(const MlpForward& fwd, const std::vector<double>& upstream) const;

    GradientBundle zero_grads() const;

    int input_dim() const { return widths_.front(); }
    int output_dim() const { return widths_.back(); }
    int num_layers() const { return static_cast<int>(weights_.size()); }
    const std::vector<int>& widths() const { return widths_; }

    std::vector<Matrix>& weights() { return weights_; }
    const std::vector<Matrix>& weights() const { return weights_; }
    std::vector<std::vector<double>>& biases() { return biases_; }
    const std::vector<std::vector<double>>& biases() const { return biases_; }

    bool all_finite() const;

  private:
    std::vector<int> widths_;
    std::vector<Matrix> weights_;              // weights_[l]: widths[l+1] x widths[l]
    std::vector<std::vector<double>> biases_;  // biases_[l]: widths[l+1]
};

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// Adaptive-moment updates over an Mlp's parameters. Throws if an update
// would produce non-finite parameters.
class Adam {
  public:
    Adam() = default;
    Adam(const Mlp& shape, const AdamConfig& config);

    void step(Mlp& net, const GradientBundle& grads);
    long steps_taken() const { return t_; }

  private:
    AdamConfig config_;
    long t_ = 0;
    std::vector<Matrix> m_w_, v_w_;
    std::vector<std::vector<double>> m_b_, v_b_;
};

}  // namespace trd
