#include "trd/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "trd/rng.hpp"

namespace trd::oracle {

namespace {

void check_gamma(double gamma) {
    if (gamma < 0.0 || gamma >= 1.0)
        throw std::invalid_argument("oracle: gamma must be in [0, 1)");
}

// One backup of Q under pi: Q'(s,a) = R(s,a) + gamma * E[ V(s') ].
double backup_sweep(const MdpSpec& spec, const Policy& pi, double gamma, QTable& q) {
    const int S = spec.num_states;
    const int A = spec.num_actions;
    VTable v(S, 0.0);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) v[s] += pi.prob(s, a) * q[s][a];

    double residual = 0.0;
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double next = 0.0;
            for (int sp = 0; sp < S; ++sp) {
                const double p = spec.p(s, a, sp);
                if (p > 0.0) next += p * v[sp];
            }
            const double updated = spec.is_terminal(s) ? 0.0 : spec.r(s, a) + gamma * next;
            residual = std::max(residual, std::abs(updated - q[s][a]));
            q[s][a] = updated;
        }
    }
    return residual;
}

}  // namespace

QTable exact_q(const MdpSpec& spec, const Policy& policy, double gamma,
               const IterationLimits& limits) {
    check_gamma(gamma);
    policy.validate();
    QTable q(spec.num_states, std::vector<double>(spec.num_actions, 0.0));
    for (int it = 0; it < limits.max_iterations; ++it) {
        if (backup_sweep(spec, policy, gamma, q) < limits.residual) return q;
    }
    throw std::runtime_error("oracle: policy evaluation did not converge");
}

VTable exact_v(const MdpSpec& spec, const Policy& policy, double gamma,
               const IterationLimits& limits) {
    const QTable q = exact_q(spec, policy, gamma, limits);
    VTable v(spec.num_states, 0.0);
    for (int s = 0; s < spec.num_states; ++s)
        for (int a = 0; a < spec.num_actions; ++a) v[s] += policy.prob(s, a) * q[s][a];
    return v;
}

QVectorTable exact_trd_q(const MdpSpec& spec, const Policy& policy, double gamma,
                         int n, int w, const IterationLimits& limits) {
    check_gamma(gamma);
    if (n < 1 || w < 1) throw std::invalid_argument("oracle: n and w must be >= 1");
    policy.validate();

    const int S = spec.num_states;
    const int A = spec.num_actions;
    QVectorTable table;
    table.n = n;
    table.w = w;
    table.gamma = gamma;
    table.q.assign(S, std::vector<RewardVector>(A, RewardVector::zeros(n, w, gamma)));

    // e[s][a] = E[R_{t+k} | S_t=s, A_t=a]; advance k with the one-step kernel.
    QTable e(S, std::vector<double>(A, 0.0));
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) e[s][a] = spec.r(s, a);

    double discount = 1.0;
    for (int k = 0; k < n * w; ++k) {
        if (k > 0) {
            VTable mixed(S, 0.0);
            for (int s = 0; s < S; ++s)
                for (int a = 0; a < A; ++a) mixed[s] += policy.prob(s, a) * e[s][a];
            QTable next(S, std::vector<double>(A, 0.0));
            for (int s = 0; s < S; ++s) {
                for (int a = 0; a < A; ++a) {
                    double acc = 0.0;
                    for (int sp = 0; sp < S; ++sp) {
                        const double p = spec.p(s, a, sp);
                        if (p > 0.0) acc += p * mixed[sp];
                    }
                    next[s][a] = acc;
                }
            }
            e.swap(next);
            discount *= gamma;
        }
        const int group = k / w;
        for (int s = 0; s < S; ++s)
            for (int a = 0; a < A; ++a) table.q[s][a][group] += discount * e[s][a];
    }

    const QTable scalar = exact_q(spec, policy, gamma, limits);
    for (int s = 0; s < S; ++s) {
        for (int a = 0; a < A; ++a) {
            double head = 0.0;
            for (int i = 0; i < n; ++i) head += table.q[s][a][i];
            table.q[s][a][n] = scalar[s][a] - head;
            if (spec.is_terminal(s)) table.q[s][a].elements.assign(n + 1, 0.0);
        }
    }
    return table;
}

VVectorTable exact_trd_v(const MdpSpec& spec, const Policy& policy, double gamma,
                         int n, int w, const IterationLimits& limits) {
    const QVectorTable q = exact_trd_q(spec, policy, gamma, n, w, limits);
    VVectorTable table;
    table.n = n;
    table.w = w;
    table.gamma = gamma;
    table.v.assign(spec.num_states, RewardVector::zeros(n, w, gamma));
    for (int s = 0; s < spec.num_states; ++s)
        for (int a = 0; a < spec.num_actions; ++a)
            for (int i = 0; i <= n; ++i)
                table.v[s][i] += policy.prob(s, a) * q.at(s, a)[i];
    return table;
}

QTable optimal_q(const MdpSpec& spec, double gamma, const IterationLimits& limits) {
    check_gamma(gamma);
    const int S = spec.num_states;
    const int A = spec.num_actions;
    QTable q(S, std::vector<double>(A, 0.0));
    for (int it = 0; it < limits.max_iterations; ++it) {
        VTable v(S, 0.0);
        for (int s = 0; s < S; ++s) v[s] = *std::max_element(q[s].begin(), q[s].end());
        double residual = 0.0;
        for (int s = 0; s < S; ++s) {
            for (int a = 0; a < A; ++a) {
                double next = 0.0;
                for (int sp = 0; sp < S; ++sp) {
                    const double p = spec.p(s, a, sp);
                    if (p > 0.0) next += p * v[sp];
                }
                const double updated = spec.is_terminal(s) ? 0.0 : spec.r(s, a) + gamma * next;
                residual = std::max(residual, std::abs(updated - q[s][a]));
                q[s][a] = updated;
            }
        }
        if (residual < limits.residual) return q;
    }
    throw std::runtime_error("oracle: value iteration did not converge");
}

Policy optimal_policy(const MdpSpec& spec, double gamma, const IterationLimits& limits) {
    const QTable q = optimal_q(spec, gamma, limits);
    std::vector<int> greedy(spec.num_states, 0);
    for (int s = 0; s < spec.num_states; ++s) {
        int best = 0;
        for (int a = 1; a < spec.num_actions; ++a)
            if (q[s][a] > q[s][best]) best = a;
        greedy[s] = best;
    }
    return Policy::deterministic(spec, greedy);
}

McTrdResult mc_trd_estimate(const MdpSpec& spec, const Policy& policy, double gamma,
                            int n, int w, int episodes, std::uint64_t seed) {
    check_gamma(gamma);
    if (n < 1 || w < 1) throw std::invalid_argument("oracle: n and w must be >= 1");
    if (episodes < 1) throw std::invalid_argument("oracle: episodes must be >= 1");
    policy.validate();

    const int S = spec.num_states;
    const int A = spec.num_actions;

    McTrdResult result;
    result.table.n = n;
    result.table.w = w;
    result.table.gamma = gamma;
    result.table.q.assign(S, std::vector<RewardVector>(A, RewardVector::zeros(n, w, gamma)));
    result.mean_return.assign(S, std::vector<double>(A, 0.0));

    for (int s0 = 0; s0 < S; ++s0) {
        for (int a0 = 0; a0 < A; ++a0) {
            if (spec.is_terminal(s0)) continue;
            auto gen = rng::substream(seed, "mc", static_cast<std::uint64_t>(s0) * A + a0);
            auto& bins = result.table.q[s0][a0].elements;
            double return_acc = 0.0;
            for (int ep = 0; ep < episodes; ++ep) {
                int s = s0;
                int a = a0;
                double discount = 1.0;
                double ret = 0.0;
                for (int t = 0; t < spec.max_episode_steps; ++t) {
                    const double dr = discount * spec.r(s, a);
                    bins[std::min(t / w, n)] += dr;
                    ret += dr;
                    s = spec.sample_next(s, a, gen);
                    if (spec.is_terminal(s)) break;
                    a = policy.sample(s, gen);
                    discount *= gamma;
                }
                return_acc += ret;
            }
            for (double& b : bins) b /= episodes;
            result.mean_return[s0][a0] = return_acc / episodes;
        }
    }
    return result;
}

RewardVector aggregate_groups(const RewardVector& fine, int w) {
    if (fine.w != 1) throw std::invalid_argument("aggregate_groups: input must have w=1");
    if (w < 1 || fine.n % w != 0)
        throw std::invalid_argument("aggregate_groups: w must divide n");
    const int coarse_n = fine.n / w;
    RewardVector out = RewardVector::zeros(coarse_n, w, fine.gamma);
    for (int i = 0; i < fine.n; ++i) out[i / w] += fine[i];
    out[coarse_n] = fine.tail();
    return out;
}

void write_csv(const QVectorTable& table, std::ostream& out) {
    out << "state,action";
    for (int i = 0; i <= table.n; ++i) out << ",element_" << i;
    out << ",scalar_sum\n";
    char buf[64];
    for (std::size_t s = 0; s < table.q.size(); ++s) {
        for (std::size_t a = 0; a < table.q[s].size(); ++a) {
            out << s << ',' << a;
            for (double e : table.q[s][a].elements) {
                std::snprintf(buf, sizeof(buf), "%.17g", e);
                out << ',' << buf;
            }
            std::snprintf(buf, sizeof(buf), "%.17g", table.q[s][a].sum());
            out << ',' << buf << '\n';
        }
    }
}

}  // namespace trd::oracle
