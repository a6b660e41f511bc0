#pragma once

// Independent check that the exact reward-vector tables are a zero of the
// bootstrap target: enumerate every w-step trajectory from each (s, a) under
// the greedy policy with its probability, feed each realized trajectory
// through the real record/target path, and compare the probability-weighted
// target against the table entry.

#include <cmath>
#include <vector>

#include "trd/learner.hpp"
#include "trd/oracle.hpp"

namespace trd::testsupport {

struct FixedPointResult {
    double max_residual = 0.0;
    long paths = 0;
};

namespace detail {

struct PathContext {
    const MdpSpec* spec;
    const Policy* greedy;
    const oracle::QVectorTable* table;
    double gamma;
    int w;
    std::vector<double>* expected;
    long* paths;
};

inline int greedy_of(const Policy& pi, int s) {
    for (int a = 0; a < pi.num_actions; ++a)
        if (pi.prob(s, a) == 1.0) return a;
    int best = 0;
    for (int a = 1; a < pi.num_actions; ++a)
        if (pi.prob(s, a) > pi.prob(s, best)) best = a;
    return best;
}

inline void walk(const PathContext& ctx, int s, int a, int depth, double prob,
                 double grouped, TransitionRecord rec) {
    const MdpSpec& spec = *ctx.spec;
    const double step_reward = std::pow(ctx.gamma, depth) * spec.r(s, a);
    for (int sp = 0; sp < spec.num_states; ++sp) {
        const double p = spec.p(s, a, sp);
        if (p <= 0.0) continue;
        const double path_prob = prob * p;
        const double path_grouped = grouped + step_reward;
        const bool terminal = spec.is_terminal(sp);
        if (terminal || depth + 1 == ctx.w) {
            rec.grouped_reward = path_grouped;
            rec.state_t_plus_w = sp;
            rec.terminated_within_w = terminal;
            std::vector<RewardVector> next_vectors;
            for (int na = 0; na < spec.num_actions; ++na)
                next_vectors.push_back(ctx.table->at(sp, na));
            const auto target = trd_target_one(rec, next_vectors, ctx.gamma, ctx.w);
            for (std::size_t i = 0; i < target.size(); ++i)
                (*ctx.expected)[i] += path_prob * target[i];
            ++(*ctx.paths);
        } else {
            walk(ctx, sp, greedy_of(*ctx.greedy, sp), depth + 1, path_prob, path_grouped, rec);
        }
    }
}

}  // namespace detail

inline FixedPointResult check_target_fixed_point(const MdpSpec& spec, double gamma, int n,
                                                 int w) {
    const Policy greedy = oracle::optimal_policy(spec, gamma);
    const oracle::QVectorTable table = oracle::exact_trd_q(spec, greedy, gamma, n, w);

    FixedPointResult result;
    for (int s = 0; s < spec.num_states; ++s) {
        if (spec.is_terminal(s)) continue;
        for (int a = 0; a < spec.num_actions; ++a) {
            std::vector<double> expected(n + 1, 0.0);
            TransitionRecord rec;
            rec.state_t = s;
            rec.action = a;
            detail::PathContext ctx{&spec, &greedy, &table, gamma, w, &expected, &result.paths};
            detail::walk(ctx, s, a, 0, 1.0, 0.0, rec);
            for (int i = 0; i <= n; ++i)
                result.max_residual =
                    std::max(result.max_residual, std::abs(expected[i] - table.at(s, a)[i]));
        }
    }
    return result;
}

}  // namespace trd::testsupport
