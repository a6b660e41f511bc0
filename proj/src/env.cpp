#include "trd/env.hpp"

#include <stdexcept>

#include "trd/rng.hpp"

namespace trd {

Env::Env(MdpSpec spec) : spec_(std::move(spec)) {
    spec_.validate();
    state_.current_state = -1;
    state_.terminated = true;  // unusable until reset()
}

Observation Env::reset(std::uint64_t seed) {
    state_.gen = rng::substream(seed, "env");
    state_.current_state = spec_.sample_initial(state_.gen);
    state_.elapsed_steps = 0;
    state_.terminated = false;
    state_.truncated = false;
    return observe();
}

StepResult Env::step(int action) {
    if (done() || state_.current_state < 0)
        throw std::logic_error("Env::step called on a finished episode");
    if (action < 0 || action >= spec_.num_actions)
        throw std::invalid_argument("Env::step: action index out of range");

    const int s = state_.current_state;
    const double reward = spec_.r(s, action);
    const int next = spec_.sample_next(s, action, state_.gen);

    state_.current_state = next;
    ++state_.elapsed_steps;
    state_.terminated = spec_.is_terminal(next);
    state_.truncated = !state_.terminated && state_.elapsed_steps >= spec_.max_episode_steps;

    return StepResult{observe(), reward, state_.terminated, state_.truncated};
}

Observation Env::observe() const {
    return Observation{spec_.obs(state_.current_state)};
}

}  // namespace trd
