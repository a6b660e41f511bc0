#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace trd {

// Finite MDP: row-stochastic transition table P(s'|s,a), expected-reward
// table R(s,a), terminal flags and an initial-state distribution.
// Terminal states are absorbing (self-loop, zero reward).
struct MdpSpec {
    std::string kind;
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> transition;   // [s][a][s'] flattened
    std::vector<double> reward;       // [s][a] flattened
    std::vector<bool> terminal;       // per state
    std::vector<double> initial_dist; // per state, sums to 1
    // Per-state feature encoding presented to function approximators.
    // One-hot unless the builder installs something env-specific.
    std::vector<std::vector<double>> observation;
    int max_episode_steps = 200;

    static constexpr double kRowSumTol = 1e-12;

    double p(int s, int a, int sp) const {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + sp];
    }
    double& p_ref(int s, int a, int sp) {
        return transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states + sp];
    }
    double r(int s, int a) const {
        return reward[static_cast<std::size_t>(s) * num_actions + a];
    }
    double& r_ref(int s, int a) {
        return reward[static_cast<std::size_t>(s) * num_actions + a];
    }
    bool is_terminal(int s) const { return terminal[s]; }

    int obs_dim() const { return observation.empty() ? 0 : static_cast<int>(observation[0].size()); }
    const std::vector<double>& obs(int s) const { return observation[s]; }

    // Allocates zeroed tables for num_states/num_actions and makes every
    // state absorbing; builders then overwrite the non-terminal rows.
    void allocate();
    // Installs one-hot state encodings.
    void use_one_hot_observations();
    // If every reward is either 0 or one constant c != 0, returns c.
    std::optional<double> binary_reward_constant() const;
    // Throws std::invalid_argument on any violated invariant.
    void validate() const;

    int sample_initial(std::mt19937_64& gen) const;
    int sample_next(int s, int a, std::mt19937_64& gen) const;
};

// Row-stochastic action distribution per state.
struct Policy {
    int num_states = 0;
    int num_actions = 0;
    std::vector<double> action_prob;  // [s][a] flattened

    double prob(int s, int a) const {
        return action_prob[static_cast<std::size_t>(s) * num_actions + a];
    }
    double& prob_ref(int s, int a) {
        return action_prob[static_cast<std::size_t>(s) * num_actions + a];
    }
    int sample(int s, std::mt19937_64& gen) const;
    void validate() const;

    static Policy uniform(const MdpSpec& spec);
    static Policy deterministic(const MdpSpec& spec, const std::vector<int>& actions);
};

}  // namespace trd
