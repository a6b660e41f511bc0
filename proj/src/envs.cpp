#include "trd/envs.hpp"

#include <set>
#include <stdexcept>
#include <string>

namespace trd {

MdpSpec make_gridworld_two_paths() {
    using namespace gridworld;
    MdpSpec spec;
    spec.kind = "gridworld_two_paths";
    spec.num_states = 10;  // junction, up corridor 1..4, down corridor 5..8, terminal 9
    spec.num_actions = 2;
    spec.allocate();

    auto forced_move = [&spec](int from, int to, double reward) {
        for (int a = 0; a < spec.num_actions; ++a) {
            spec.p_ref(from, a, from) = 0.0;
            spec.p_ref(from, a, to) = 1.0;
            spec.r_ref(from, a) = reward;
        }
    };

    // Junction: up enters the chest corridor, down the coin corridor.
    spec.p_ref(kJunction, kActionUp, kJunction) = 0.0;
    spec.p_ref(kJunction, kActionUp, 1) = 1.0;
    spec.p_ref(kJunction, kActionDown, kJunction) = 0.0;
    spec.p_ref(kJunction, kActionDown, 5) = 1.0;

    // Up: three empty cells, then the chest on the final transition.
    forced_move(1, 2, 0.0);
    forced_move(2, 3, 0.0);
    forced_move(3, 4, 0.0);
    forced_move(4, kTerminal, kChestReward);

    // Down: a coin on every transition after the first.
    forced_move(5, 6, kCoinReward);
    forced_move(6, 7, kCoinReward);
    forced_move(7, 8, kCoinReward);
    forced_move(8, kTerminal, kCoinReward);

    spec.terminal[kTerminal] = true;
    spec.initial_dist[kJunction] = 1.0;
    spec.use_one_hot_observations();
    spec.validate();
    return spec;
}

MdpSpec make_periodic_chain(int period, double slip_prob, int num_cycles) {
    if (period < 2) throw std::invalid_argument("periodic_chain: period must be >= 2");
    if (slip_prob < 0.0 || slip_prob >= 1.0)
        throw std::invalid_argument("periodic_chain: slip_prob must be in [0, 1)");
    if (num_cycles < 1) throw std::invalid_argument("periodic_chain: num_cycles must be >= 1");

    MdpSpec spec;
    spec.kind = "periodic_chain";
    const int length = period * num_cycles;
    spec.num_states = length + 1;
    spec.num_actions = 1;
    spec.allocate();

    for (int i = 0; i < length; ++i) {
        const bool pays = ((i + 1) % period) == 0;
        spec.p_ref(i, 0, i) = 0.0;
        if (pays) {
            // The paying hop is deterministic so realized rewards stay 0/1.
            spec.p_ref(i, 0, i + 1) = 1.0;
            spec.r_ref(i, 0) = 1.0;
        } else {
            spec.p_ref(i, 0, i + 1) = 1.0 - slip_prob;
            spec.p_ref(i, 0, i) = slip_prob;
        }
    }
    spec.terminal[length] = true;
    spec.initial_dist[0] = 1.0;
    spec.use_one_hot_observations();
    spec.validate();
    return spec;
}

FeatureSplitLayout feature_split_layout(int delay) {
    if (delay < 1) throw std::invalid_argument("feature_split: delay must be >= 1");
    FeatureSplitLayout layout;
    layout.delay = delay;
    layout.num_states = 4 + 2 * delay + 1;
    return layout;
}

MdpSpec make_feature_split_env(int delay) {
    const FeatureSplitLayout lay = feature_split_layout(delay);
    MdpSpec spec;
    spec.kind = "feature_split";
    spec.num_states = lay.num_states;
    spec.num_actions = 2;
    spec.allocate();

    const int terminal = lay.terminal_state();
    for (int a = 0; a <= 1; ++a) {
        for (int b = 0; b <= 1; ++b) {
            const int s0 = lay.initial_state(a, b);
            for (int act = 0; act < 2; ++act) {
                spec.p_ref(s0, act, s0) = 0.0;
                spec.p_ref(s0, act, lay.corridor_state(b, 1)) = 1.0;
            }
            spec.r_ref(s0, lay.action_take) = static_cast<double>(a);
            spec.r_ref(s0, lay.action_pass) = 0.0;
            spec.initial_dist[s0] = 0.25;
        }
    }
    for (int b = 0; b <= 1; ++b) {
        for (int j = 1; j <= lay.delay; ++j) {
            const int s = lay.corridor_state(b, j);
            const int next = (j == lay.delay) ? terminal : lay.corridor_state(b, j + 1);
            const double reward = (j == lay.delay) ? static_cast<double>(b) : 0.0;
            for (int act = 0; act < 2; ++act) {
                spec.p_ref(s, act, s) = 0.0;
                spec.p_ref(s, act, next) = 1.0;
                spec.r_ref(s, act) = reward;
            }
        }
    }
    spec.terminal[terminal] = true;

    // Observation: [A, B, position one-hot]. A is consumed after the first
    // step; B stays visible until the delayed reward resolves.
    spec.observation.assign(spec.num_states, std::vector<double>(lay.obs_dim(), 0.0));
    for (int a = 0; a <= 1; ++a) {
        for (int b = 0; b <= 1; ++b) {
            auto& o = spec.observation[lay.initial_state(a, b)];
            o[lay.feature_a] = static_cast<double>(a);
            o[lay.feature_b] = static_cast<double>(b);
            o[2] = 1.0;
        }
    }
    for (int b = 0; b <= 1; ++b) {
        for (int j = 1; j <= lay.delay; ++j) {
            auto& o = spec.observation[lay.corridor_state(b, j)];
            o[lay.feature_b] = static_cast<double>(b);
            o[2 + j] = 1.0;
        }
    }
    spec.observation[terminal][2 + lay.delay + 1] = 1.0;

    spec.validate();
    return spec;
}

MdpSpec env_from_config(const nlohmann::json& section) {
    if (!section.is_object()) throw std::invalid_argument("env section must be an object");
    if (!section.contains("kind")) throw std::invalid_argument("env.kind is required");
    const std::string kind = section.at("kind").get<std::string>();

    std::set<std::string> allowed = {"kind", "max_episode_steps"};
    MdpSpec spec;
    if (kind == "gridworld_two_paths") {
        spec = make_gridworld_two_paths();
    } else if (kind == "periodic_chain") {
        allowed.insert({"period", "slip_prob", "num_cycles"});
        spec = make_periodic_chain(section.value("period", 3),
                                   section.value("slip_prob", 0.0),
                                   section.value("num_cycles", 4));
    } else if (kind == "feature_split") {
        allowed.insert("delay");
        spec = make_feature_split_env(section.value("delay", 6));
    } else {
        throw std::invalid_argument("env.kind must be one of gridworld_two_paths, "
                                    "periodic_chain, feature_split (got '" + kind + "')");
    }
    for (auto it = section.begin(); it != section.end(); ++it) {
        if (!allowed.count(it.key()))
            throw std::invalid_argument("env section: unknown key '" + it.key() + "'");
    }
    if (section.contains("max_episode_steps")) {
        spec.max_episode_steps = section.at("max_episode_steps").get<int>();
        spec.validate();
    }
    return spec;
}

}  // namespace trd
