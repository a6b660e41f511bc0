#include "trd/estimators.hpp"

#include <stdexcept>

namespace trd {

std::vector<double> scalar_q(const TrdEstimator& est, const Observation& obs) {
    const auto vectors = est.predict_vector(obs);
    std::vector<double> q(vectors.size());
    for (std::size_t a = 0; a < vectors.size(); ++a) q[a] = vectors[a].sum();
    return q;
}

int greedy_action(const TrdEstimator& est, const Observation& obs) {
    const auto q = scalar_q(est, obs);
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = static_cast<int>(a);
    return best;
}

int one_hot_state(const Observation& obs) {
    int state = -1;
    for (int i = 0; i < obs.dim(); ++i) {
        const double v = obs.features[i];
        if (v == 0.0) continue;
        if (v != 1.0 || state >= 0)
            throw std::invalid_argument("observation is not a one-hot state encoding");
        state = i;
    }
    if (state < 0) throw std::invalid_argument("observation is not a one-hot state encoding");
    return state;
}

TabularTrd::TabularTrd(int num_states, int num_actions, int n, int w, double gamma)
    : num_states_(num_states), num_actions_(num_actions), n_(n), w_(w), gamma_(gamma) {
    if (num_states < 1 || num_actions < 1 || n < 1 || w < 1)
        throw std::invalid_argument("TabularTrd: invalid shape");
    table_.assign(static_cast<std::size_t>(num_states) * num_actions,
                  RewardVector::zeros(n, w, gamma));
}

TabularTrd TabularTrd::from_oracle(const oracle::QVectorTable& table) {
    const int S = static_cast<int>(table.q.size());
    const int A = static_cast<int>(table.q[0].size());
    TabularTrd est(S, A, table.n, table.w, table.gamma);
    for (int s = 0; s < S; ++s)
        for (int a = 0; a < A; ++a) est.at(s, a) = table.q[s][a];
    return est;
}

std::vector<RewardVector> TabularTrd::predict_vector(const Observation& obs) const {
    if (obs.dim() != num_states_)
        throw std::invalid_argument("TabularTrd: observation dimension mismatch");
    return vectors_for_state(one_hot_state(obs));
}

const RewardVector& TabularTrd::at(int state, int action) const {
    return table_[static_cast<std::size_t>(state) * num_actions_ + action];
}

RewardVector& TabularTrd::at(int state, int action) {
    return table_[static_cast<std::size_t>(state) * num_actions_ + action];
}

std::vector<RewardVector> TabularTrd::vectors_for_state(int state) const {
    if (state < 0 || state >= num_states_)
        throw std::invalid_argument("TabularTrd: state index out of range");
    std::vector<RewardVector> out;
    out.reserve(num_actions_);
    for (int a = 0; a < num_actions_; ++a) out.push_back(at(state, a));
    return out;
}

void TabularTrd::update_toward(int state, int action, const std::vector<double>& target,
                               double step) {
    RewardVector& v = at(state, action);
    if (target.size() != v.elements.size())
        throw std::invalid_argument("TabularTrd: target length mismatch");
    for (std::size_t i = 0; i < target.size(); ++i)
        v.elements[i] += step * (target[i] - v.elements[i]);
}

NeuralTrd::NeuralTrd(int obs_dim, int num_actions, int n, int w, double gamma,
                     const std::vector<int>& hidden_widths, std::uint64_t seed)
    : num_actions_(num_actions), n_(n), w_(w), gamma_(gamma), seed_(seed) {
    if (num_actions < 1 || n < 1 || w < 1)
        throw std::invalid_argument("NeuralTrd: invalid shape");
    std::vector<int> widths;
    widths.push_back(obs_dim);
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(num_actions * (n + 1));
    net_ = Mlp::init(widths, seed);
}

std::vector<RewardVector> NeuralTrd::predict_vector(const Observation& obs) const {
    const auto fwd = net_.forward(obs.features);
    const auto& out = fwd.output();
    std::vector<RewardVector> vectors(num_actions_, RewardVector::zeros(n_, w_, gamma_));
    for (int a = 0; a < num_actions_; ++a)
        for (int i = 0; i <= n_; ++i) vectors[a][i] = out[flat_index(a, i)];
    return vectors;
}

std::pair<std::vector<double>, GradientBundle> NeuralTrd::forward_backward(
    const Observation& obs, const std::vector<double>& upstream) const {
    const auto fwd = net_.forward(obs.features);
    auto bwd = net_.backward(fwd, upstream);
    return {fwd.output(), std::move(bwd.grads)};
}

ScalarQNet::ScalarQNet(int obs_dim, int num_actions, double gamma,
                       const std::vector<int>& hidden_widths, std::uint64_t seed)
    : num_actions_(num_actions), gamma_(gamma), seed_(seed) {
    if (num_actions < 1) throw std::invalid_argument("ScalarQNet: invalid action count");
    std::vector<int> widths;
    widths.push_back(obs_dim);
    widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
    widths.push_back(num_actions);
    net_ = Mlp::init(widths, seed);
}

std::vector<double> ScalarQNet::q_values(const Observation& obs) const {
    return net_.forward(obs.features).output();
}

int ScalarQNet::greedy(const Observation& obs) const {
    const auto q = q_values(obs);
    int best = 0;
    for (std::size_t a = 1; a < q.size(); ++a)
        if (q[a] > q[best]) best = static_cast<int>(a);
    return best;
}

}  // namespace trd
