#pragma once

#include <vector>

namespace trd {

// Length-(n+1) decomposition of a discounted return. Element i < n holds the
// expected discounted reward of timestep group i (steps i*w .. (i+1)*w - 1);
// element n is the tail beyond n*w steps. Summing the elements recovers the
// scalar value.
struct RewardVector {
    std::vector<double> elements;
    int n = 0;
    int w = 1;
    double gamma = 0.99;

    int size() const { return static_cast<int>(elements.size()); }
    double operator[](int i) const { return elements[i]; }
    double& operator[](int i) { return elements[i]; }
    double tail() const { return elements.back(); }

    double sum() const {
        double total = 0.0;
        for (double e : elements) total += e;
        return total;
    }

    static RewardVector zeros(int n, int w, double gamma) {
        RewardVector v;
        v.n = n;
        v.w = w;
        v.gamma = gamma;
        v.elements.assign(n + 1, 0.0);
        return v;
    }
};

}  // namespace trd
