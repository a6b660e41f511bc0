#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "trd/mdp.hpp"
#include "trd/reward_vector.hpp"

namespace trd::oracle {

// Policy-evaluation / value-iteration convergence control.
struct IterationLimits {
    double residual = 1e-10;  // sup-norm
    int max_iterations = 100000;
};

// Scalar tables indexed [state][action] / [state].
using QTable = std::vector<std::vector<double>>;
using VTable = std::vector<double>;

struct QVectorTable {
    int n = 0;
    int w = 1;
    double gamma = 0.99;
    std::vector<std::vector<RewardVector>> q;  // [state][action]

    const RewardVector& at(int s, int a) const { return q[s][a]; }
};

struct VVectorTable {
    int n = 0;
    int w = 1;
    double gamma = 0.99;
    std::vector<RewardVector> v;  // [state]
};

// Fixed-point policy evaluation by iterative backup. Throws std::runtime_error
// if the residual does not fall below the limit within the iteration cap.
QTable exact_q(const MdpSpec& spec, const Policy& policy, double gamma,
               const IterationLimits& limits = {});
VTable exact_v(const MdpSpec& spec, const Policy& policy, double gamma,
               const IterationLimits& limits = {});

// Exact per-group expected discounted rewards via the forward k-step state
// distribution; the tail is the scalar value minus the head sum, so summing
// a vector reproduces the scalar table exactly.
QVectorTable exact_trd_q(const MdpSpec& spec, const Policy& policy, double gamma,
                         int n, int w, const IterationLimits& limits = {});
VVectorTable exact_trd_v(const MdpSpec& spec, const Policy& policy, double gamma,
                         int n, int w, const IterationLimits& limits = {});

// Greedy policy from value iteration, ties broken by lowest action index.
Policy optimal_policy(const MdpSpec& spec, double gamma,
                      const IterationLimits& limits = {});
QTable optimal_q(const MdpSpec& spec, double gamma,
                 const IterationLimits& limits = {});

// Monte-Carlo estimate of the same decomposition. mean_return is averaged
// over exactly the trajectories used for the element means, so the
// sum-of-means vs mean-of-sums identity can be checked on shared samples.
struct McTrdResult {
    QVectorTable table;
    QTable mean_return;
};

McTrdResult mc_trd_estimate(const MdpSpec& spec, const Policy& policy, double gamma,
                            int n, int w, int episodes, std::uint64_t seed);

// Aggregates a w=1 vector into width-w groups (tail unchanged).
RewardVector aggregate_groups(const RewardVector& fine, int w);

// CSV schema: state, action, element_0 ... element_N, scalar_sum
void write_csv(const QVectorTable& table, std::ostream& out);

}  // namespace trd::oracle
