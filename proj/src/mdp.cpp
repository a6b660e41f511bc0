#include "trd/mdp.hpp"

#include <cmath>
#include <stdexcept>

namespace trd {

namespace {

int sample_from_row(const double* probs, int count, std::mt19937_64& gen) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    double u = unit(gen);
    double acc = 0.0;
    for (int i = 0; i < count; ++i) {
        acc += probs[i];
        if (u < acc) return i;
    }
    // Row sums to 1 within tolerance; u can still land in the residual.
    for (int i = count - 1; i >= 0; --i) {
        if (probs[i] > 0.0) return i;
    }
    return count - 1;
}

}  // namespace

void MdpSpec::allocate() {
    transition.assign(static_cast<std::size_t>(num_states) * num_actions * num_states, 0.0);
    reward.assign(static_cast<std::size_t>(num_states) * num_actions, 0.0);
    terminal.assign(num_states, false);
    initial_dist.assign(num_states, 0.0);
    for (int s = 0; s < num_states; ++s)
        for (int a = 0; a < num_actions; ++a) p_ref(s, a, s) = 1.0;
}

void MdpSpec::use_one_hot_observations() {
    observation.assign(num_states, std::vector<double>(num_states, 0.0));
    for (int s = 0; s < num_states; ++s) observation[s][s] = 1.0;
}

std::optional<double> MdpSpec::binary_reward_constant() const {
    double c = 0.0;
    for (double v : reward) {
        if (v == 0.0) continue;
        if (c == 0.0) {
            c = v;
        } else if (v != c) {
            return std::nullopt;
        }
    }
    if (c == 0.0) return std::nullopt;
    return c;
}

void MdpSpec::validate() const {
    if (num_states <= 0 || num_actions <= 0)
        throw std::invalid_argument("MdpSpec: empty state or action set");
    if (transition.size() != static_cast<std::size_t>(num_states) * num_actions * num_states)
        throw std::invalid_argument("MdpSpec: transition table shape mismatch");
    if (reward.size() != static_cast<std::size_t>(num_states) * num_actions)
        throw std::invalid_argument("MdpSpec: reward table shape mismatch");
    if (terminal.size() != static_cast<std::size_t>(num_states))
        throw std::invalid_argument("MdpSpec: terminal flags shape mismatch");
    if (initial_dist.size() != static_cast<std::size_t>(num_states))
        throw std::invalid_argument("MdpSpec: initial distribution shape mismatch");
    if (observation.size() != static_cast<std::size_t>(num_states))
        throw std::invalid_argument("MdpSpec: observation table shape mismatch");

    for (int s = 0; s < num_states; ++s) {
        for (int a = 0; a < num_actions; ++a) {
            double row_sum = 0.0;
            for (int sp = 0; sp < num_states; ++sp) {
                double v = p(s, a, sp);
                if (v < 0.0 || !std::isfinite(v))
                    throw std::invalid_argument("MdpSpec: invalid transition probability");
                row_sum += v;
            }
            if (std::abs(row_sum - 1.0) > kRowSumTol)
                throw std::invalid_argument("MdpSpec: transition row does not sum to 1");
            if (!std::isfinite(r(s, a)))
                throw std::invalid_argument("MdpSpec: non-finite reward");
        }
        if (terminal[s]) {
            for (int a = 0; a < num_actions; ++a) {
                if (p(s, a, s) != 1.0)
                    throw std::invalid_argument("MdpSpec: terminal state must self-loop");
                if (r(s, a) != 0.0)
                    throw std::invalid_argument("MdpSpec: terminal state must have zero reward");
            }
        }
        if (observation[s].size() != observation[0].size())
            throw std::invalid_argument("MdpSpec: ragged observation encoding");
    }

    double init_sum = 0.0;
    for (int s = 0; s < num_states; ++s) {
        if (initial_dist[s] < 0.0) throw std::invalid_argument("MdpSpec: negative initial probability");
        if (initial_dist[s] > 0.0 && terminal[s])
            throw std::invalid_argument("MdpSpec: initial state cannot be terminal");
        init_sum += initial_dist[s];
    }
    if (std::abs(init_sum - 1.0) > kRowSumTol)
        throw std::invalid_argument("MdpSpec: initial distribution does not sum to 1");
    if (max_episode_steps <= 0)
        throw std::invalid_argument("MdpSpec: max_episode_steps must be positive");
}

int MdpSpec::sample_initial(std::mt19937_64& gen) const {
    return sample_from_row(initial_dist.data(), num_states, gen);
}

int MdpSpec::sample_next(int s, int a, std::mt19937_64& gen) const {
    const double* row = &transition[(static_cast<std::size_t>(s) * num_actions + a) * num_states];
    return sample_from_row(row, num_states, gen);
}

int Policy::sample(int s, std::mt19937_64& gen) const {
    const double* row = &action_prob[static_cast<std::size_t>(s) * num_actions];
    return sample_from_row(row, num_actions, gen);
}

void Policy::validate() const {
    if (action_prob.size() != static_cast<std::size_t>(num_states) * num_actions)
        throw std::invalid_argument("Policy: table shape mismatch");
    for (int s = 0; s < num_states; ++s) {
        double row_sum = 0.0;
        for (int a = 0; a < num_actions; ++a) {
            double v = prob(s, a);
            if (v < 0.0 || !std::isfinite(v))
                throw std::invalid_argument("Policy: invalid action probability");
            row_sum += v;
        }
        if (std::abs(row_sum - 1.0) > MdpSpec::kRowSumTol)
            throw std::invalid_argument("Policy: action row does not sum to 1");
    }
}

Policy Policy::uniform(const MdpSpec& spec) {
    Policy pi;
    pi.num_states = spec.num_states;
    pi.num_actions = spec.num_actions;
    pi.action_prob.assign(static_cast<std::size_t>(pi.num_states) * pi.num_actions,
                          1.0 / pi.num_actions);
    return pi;
}

Policy Policy::deterministic(const MdpSpec& spec, const std::vector<int>& actions) {
    if (actions.size() != static_cast<std::size_t>(spec.num_states))
        throw std::invalid_argument("Policy: one action per state required");
    Policy pi;
    pi.num_states = spec.num_states;
    pi.num_actions = spec.num_actions;
    pi.action_prob.assign(static_cast<std::size_t>(pi.num_states) * pi.num_actions, 0.0);
    for (int s = 0; s < spec.num_states; ++s) {
        if (actions[s] < 0 || actions[s] >= spec.num_actions)
            throw std::invalid_argument("Policy: action index out of range");
        pi.prob_ref(s, actions[s]) = 1.0;
    }
    return pi;
}

}  // namespace trd
