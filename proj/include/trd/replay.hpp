#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <random>
#include <vector>

#include "trd/env.hpp"

namespace trd {

// One replay sample spanning w environment steps: the in-group discounted
// reward sum, the observation w steps ahead, and whether the episode ended
// inside the group (in which case the missing rewards are zero and the
// bootstrap term must be masked).
struct TransitionRecord {
    Observation obs_t;
    int state_t = 0;
    int action = 0;
    double grouped_reward = 0.0;  // sum_{j<w} gamma^j * R_{t+j}
    Observation obs_t_plus_w;
    int state_t_plus_w = 0;
    bool terminated_within_w = false;
    std::vector<double> teacher_scalar_q;  // empty unless distilling offline
};

// Fixed-capacity ring buffer with FIFO eviction and a seeded sampler.
class ReplayBuffer {
  public:
    ReplayBuffer(std::size_t capacity, std::uint64_t sample_seed);

    void push(TransitionRecord record);
    std::vector<const TransitionRecord*> sample(int batch_size);

    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    const TransitionRecord& operator[](std::size_t i) const { return records_[i]; }

  private:
    std::size_t capacity_;
    std::size_t next_ = 0;
    std::vector<TransitionRecord> records_;
    std::mt19937_64 gen_;
};

// One raw environment step, as logged during collection.
struct TrajStep {
    std::uint32_t episode = 0;
    int state = 0;
    int action = 0;
    double reward = 0.0;
    int next_state = 0;
    bool terminated = false;
    bool truncated = false;
};

// Ordered step log (the teacher's replay buffer). Keeping the raw stream
// rather than pre-grouped records lets a student with any group width w
// re-assemble its own n-step samples from the same experience.
class TrajectoryLog {
  public:
    void push(TrajStep step) { steps_.push_back(step); }
    std::size_t size() const { return steps_.size(); }
    const TrajStep& operator[](std::size_t i) const { return steps_[i]; }

    void save(const std::filesystem::path& path) const;
    static TrajectoryLog load(const std::filesystem::path& path);

  private:
    std::vector<TrajStep> steps_;
};

// Streams raw steps into completed w-step TransitionRecords. Termination
// inside a group flushes partial records with the bootstrap masked;
// truncation discards pending records since there is no state to bootstrap
// from.
class NStepAssembler {
  public:
    NStepAssembler(int w, double gamma);

    // Returns the records completed by this step.
    std::vector<TransitionRecord> on_step(const Observation& obs, int state, int action,
                                          double reward, const Observation& next_obs,
                                          int next_state, bool terminated, bool truncated);
    void reset() { pending_.clear(); }

  private:
    struct Pending {
        Observation obs;
        int state;
        int action;
        double grouped_reward;
        int steps_seen;
    };

    int w_;
    double gamma_;
    std::deque<Pending> pending_;
};

// Replays a full log through the assembler (observations re-derived from the
// spec's encodings).
std::vector<TransitionRecord> assemble_records(const TrajectoryLog& log, const MdpSpec& spec,
                                               int w, double gamma);

}  // namespace trd
