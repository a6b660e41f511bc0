#pragma once

#include <json.hpp>

#include "trd/mdp.hpp"

namespace trd {

// Two corridors behind one junction: going up pays a single large reward at
// the corridor's end, going down pays a stream of unit rewards. Scalar values
// of the two actions are close while their reward timing differs sharply.
namespace gridworld {
constexpr int kJunction = 0;
constexpr int kTerminal = 9;
constexpr int kActionUp = 0;
constexpr int kActionDown = 1;
constexpr double kChestReward = 4.0;
constexpr double kCoinReward = 1.0;
}  // namespace gridworld

MdpSpec make_gridworld_two_paths();

// A chain emitting a unit reward every `period` steps for `num_cycles`
// cycles. Slips (self-loops) happen only on the zero-reward positions, so
// realized rewards stay 0/1 while reward timing grows more uncertain with
// horizon. Single action.
MdpSpec make_periodic_chain(int period, double slip_prob, int num_cycles);

// Saliency ground-truth environment: observation feature A drives only the
// immediate reward, feature B only a reward `delay` steps ahead. Action 0
// collects the A reward at the start, action 1 forgoes it.
struct FeatureSplitLayout {
    int delay = 6;
    int num_states = 0;
    int feature_a = 0;
    int feature_b = 1;
    int action_take = 0;
    int action_pass = 1;

    int initial_state(int a, int b) const { return a * 2 + b; }
    int corridor_state(int b, int j) const { return 4 + (j - 1) * 2 + b; }  // j in [1, delay]
    int terminal_state() const { return 4 + 2 * delay; }
    int obs_dim() const { return 2 + delay + 2; }
};

FeatureSplitLayout feature_split_layout(int delay = 6);
MdpSpec make_feature_split_env(int delay = 6);

// Builds an environment from the `env` section of a run config:
// {"kind": ..., kind-specific parameters...}. Unknown keys are rejected.
MdpSpec env_from_config(const nlohmann::json& section);

}  // namespace trd
