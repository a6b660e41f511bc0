#pragma once

#include <cstdint>
#include <random>

#include "trd/mdp.hpp"

namespace trd {

// Feature vector presented to estimators.
struct Observation {
    std::vector<double> features;

    int dim() const { return static_cast<int>(features.size()); }
    bool operator==(const Observation& other) const { return features == other.features; }
};

struct EnvState {
    int current_state = 0;
    int elapsed_steps = 0;
    bool terminated = false;
    bool truncated = false;
    std::mt19937_64 gen;
};

struct StepResult {
    Observation obs;
    double reward = 0.0;
    bool terminated = false;
    // Episode cut off by the step limit; not a terminal event, so
    // bootstrap targets must keep the continuation term.
    bool truncated = false;
};

// Step/reset simulation over a finite MDP. Instances are independent;
// the spec itself is immutable and shared by value.
class Env {
  public:
    explicit Env(MdpSpec spec);

    // Deterministic given the seed.
    Observation reset(std::uint64_t seed);
    // Throws std::logic_error when the episode already ended.
    StepResult step(int action);

    Observation observe() const;
    const MdpSpec& spec() const { return spec_; }
    const EnvState& state() const { return state_; }
    bool done() const { return state_.terminated || state_.truncated; }

  private:
    MdpSpec spec_;
    EnvState state_;
};

}  // namespace trd
