#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "trd/env.hpp"
#include "trd/mlp.hpp"
#include "trd/oracle.hpp"
#include "trd/reward_vector.hpp"

namespace trd {

// Maps an observation to one reward vector per action.
class TrdEstimator {
  public:
    virtual ~TrdEstimator() = default;
    virtual int num_actions() const = 0;
    virtual int horizon_n() const = 0;
    virtual int group_w() const = 0;
    virtual double gamma() const = 0;
    virtual int obs_dim() const = 0;
    virtual std::vector<RewardVector> predict_vector(const Observation& obs) const = 0;
};

// Per-action elementwise sums of predict_vector.
std::vector<double> scalar_q(const TrdEstimator& est, const Observation& obs);
// Argmax over scalar_q, ties broken by lowest action index.
int greedy_action(const TrdEstimator& est, const Observation& obs);

// Lookup table of reward vectors over (state, action). Observations must be
// exact one-hot encodings; the state index is recovered from them.
class TabularTrd final : public TrdEstimator {
  public:
    TabularTrd() = default;
    TabularTrd(int num_states, int num_actions, int n, int w, double gamma);
    static TabularTrd from_oracle(const oracle::QVectorTable& table);

    int num_actions() const override { return num_actions_; }
    int horizon_n() const override { return n_; }
    int group_w() const override { return w_; }
    double gamma() const override { return gamma_; }
    int obs_dim() const override { return num_states_; }
    std::vector<RewardVector> predict_vector(const Observation& obs) const override;

    int num_states() const { return num_states_; }
    const RewardVector& at(int state, int action) const;
    RewardVector& at(int state, int action);
    std::vector<RewardVector> vectors_for_state(int state) const;

    // Moves table[state][action] toward target by the given step size.
    void update_toward(int state, int action, const std::vector<double>& target, double step);

  private:
    int num_states_ = 0;
    int num_actions_ = 0;
    int n_ = 0;
    int w_ = 1;
    double gamma_ = 0.99;
    std::vector<RewardVector> table_;  // [state * num_actions + action]
};

// Fully connected reward-vector estimator; output reshapes to
// (num_actions, n + 1) row-major.
class NeuralTrd final : public TrdEstimator {
  public:
    NeuralTrd() = default;
    NeuralTrd(int obs_dim, int num_actions, int n, int w, double gamma,
              const std::vector<int>& hidden_widths, std::uint64_t seed);

    int num_actions() const override { return num_actions_; }
    int horizon_n() const override { return n_; }
    int group_w() const override { return w_; }
    double gamma() const override { return gamma_; }
    int obs_dim() const override { return net_.input_dim(); }
    std::vector<RewardVector> predict_vector(const Observation& obs) const override;

    // Raw flat outputs plus analytic parameter and input gradients for the
    // given upstream gradient (same flat action-major layout).
    std::pair<std::vector<double>, GradientBundle> forward_backward(
        const Observation& obs, const std::vector<double>& upstream) const;

    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    std::uint64_t init_seed() const { return seed_; }

    int flat_index(int action, int element) const { return action * (n_ + 1) + element; }

  private:
    int num_actions_ = 0;
    int n_ = 0;
    int w_ = 1;
    double gamma_ = 0.99;
    std::uint64_t seed_ = 0;
    Mlp net_;
};

// Scalar Q network (one output per action); the teacher-side estimator.
class ScalarQNet {
  public:
    ScalarQNet() = default;
    ScalarQNet(int obs_dim, int num_actions, double gamma,
               const std::vector<int>& hidden_widths, std::uint64_t seed);

    std::vector<double> q_values(const Observation& obs) const;
    int greedy(const Observation& obs) const;

    int num_actions() const { return num_actions_; }
    int obs_dim() const { return net_.input_dim(); }
    double gamma() const { return gamma_; }
    Mlp& net() { return net_; }
    const Mlp& net() const { return net_; }
    std::uint64_t init_seed() const { return seed_; }

  private:
    int num_actions_ = 0;
    double gamma_ = 0.99;
    std::uint64_t seed_ = 0;
    Mlp net_;
};

// Recovers a state index from a one-hot observation; throws if the encoding
// is not an exact one-hot.
int one_hot_state(const Observation& obs);

}  // namespace trd
