#pragma once

// Supervised fixture helper: regress a neural estimator onto the exact
// reward-vector table so explanation mechanisms can be tested against a
// converged network without a full training run.

#include <vector>

#include "trd/estimators.hpp"
#include "trd/oracle.hpp"

namespace trd::testsupport {

inline double fit_to_oracle(NeuralTrd& est, const MdpSpec& spec,
                            const oracle::QVectorTable& table, int steps,
                            double learning_rate = 1e-2) {
    Adam adam(est.net(), AdamConfig{learning_rate});
    const int n = table.n;
    const int A = spec.num_actions;

    std::vector<int> states;
    for (int s = 0; s < spec.num_states; ++s)
        if (!spec.is_terminal(s)) states.push_back(s);

    double mse = 0.0;
    for (int step = 0; step < steps; ++step) {
        GradientBundle grads = est.net().zero_grads();
        mse = 0.0;
        const double denom = static_cast<double>(states.size()) * A * (n + 1);
        for (int s : states) {
            const MlpForward fwd = est.net().forward(spec.obs(s));
            std::vector<double> upstream(est.net().output_dim(), 0.0);
            for (int a = 0; a < A; ++a) {
                for (int i = 0; i <= n; ++i) {
                    const double diff =
                        fwd.output()[est.flat_index(a, i)] - table.at(s, a)[i];
                    mse += diff * diff / denom;
                    upstream[est.flat_index(a, i)] = 2.0 * diff / denom;
                }
            }
            grads.add(est.net().backward(fwd, upstream).grads);
        }
        adam.step(est.net(), grads);
    }
    return mse;
}

}  // namespace trd::testsupport
