#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "trd/envs.hpp"
#include "trd/oracle.hpp"

using namespace trd;

namespace {

std::vector<std::pair<MdpSpec, double>> test_specs() {
    return {
        {make_gridworld_two_paths(), 0.95},
        {make_periodic_chain(3, 0.0, 4), 0.99},
        {make_periodic_chain(3, 0.25, 4), 0.99},
        {make_feature_split_env(4), 0.99},
    };
}

}  // namespace

TEST_CASE("zero discount collapses Q to the reward table") {
    const MdpSpec spec = make_gridworld_two_paths();
    const auto q = oracle::exact_q(spec, Policy::uniform(spec), 0.0);
    for (int s = 0; s < spec.num_states; ++s)
        for (int a = 0; a < spec.num_actions; ++a) CHECK(q[s][a] == spec.r(s, a));
}

TEST_CASE("chain value matches the closed-form geometric sum") {
    const MdpSpec spec = make_periodic_chain(3, 0.0, 4);
    const double gamma = 0.99;
    const auto q = oracle::exact_q(spec, Policy::uniform(spec), gamma);
    double closed_form = 0.0;
    for (int k = 0; k < 4; ++k) closed_form += std::pow(gamma, 3 * k + 2);
    CHECK(q[0][0] == doctest::Approx(closed_form).epsilon(1e-9));
}

TEST_CASE("state values are the policy-weighted action values") {
    for (const auto& [spec, gamma] : test_specs()) {
        const Policy pi = Policy::uniform(spec);
        const auto q = oracle::exact_q(spec, pi, gamma);
        const auto v = oracle::exact_v(spec, pi, gamma);
        for (int s = 0; s < spec.num_states; ++s) {
            double mixed = 0.0;
            for (int a = 0; a < spec.num_actions; ++a) mixed += pi.prob(s, a) * q[s][a];
            CHECK(v[s] == doctest::Approx(mixed).epsilon(1e-12));
        }
    }
}

TEST_CASE("terminal states have zero value") {
    const MdpSpec spec = make_gridworld_two_paths();
    const auto v = oracle::exact_v(spec, Policy::uniform(spec), 0.95);
    CHECK(v[gridworld::kTerminal] == 0.0);
}

TEST_CASE("junction value under the committed down policy") {
    const MdpSpec spec = make_gridworld_two_paths();
    const Policy down = Policy::deterministic(spec, std::vector<int>(spec.num_states, 1));
    const auto v = oracle::exact_v(spec, down, 0.95);
    CHECK(std::round(v[gridworld::kJunction] * 100.0) / 100.0 == 3.52);

    const auto qv = oracle::exact_trd_v(spec, down, 0.95, 4, 1);
    const auto qq = oracle::exact_trd_q(spec, down, 0.95, 4, 1);
    for (int i = 0; i <= 4; ++i)
        CHECK(qv.v[0][i] ==
              doctest::Approx(qq.at(0, gridworld::kActionDown)[i]).epsilon(1e-12));
}

TEST_CASE("vector sums reproduce the scalar value for every (n, w)") {
    for (const auto& [spec, gamma] : test_specs()) {
        for (const Policy& pi : {Policy::uniform(spec), oracle::optimal_policy(spec, gamma)}) {
            const auto scalar = oracle::exact_q(spec, pi, gamma);
            for (int n : {1, 3, 8}) {
                for (int w : {1, 2, 4}) {
                    const auto table = oracle::exact_trd_q(spec, pi, gamma, n, w);
                    for (int s = 0; s < spec.num_states; ++s)
                        for (int a = 0; a < spec.num_actions; ++a)
                            CHECK(std::abs(table.at(s, a).sum() - scalar[s][a]) < 1e-9);
                }
            }
        }
    }
}

TEST_CASE("width-w grouping equals aggregated w=1 elements") {
    for (const auto& [spec, gamma] : test_specs()) {
        const Policy pi = oracle::optimal_policy(spec, gamma);
        const int n = 4, w = 2;
        const auto fine = oracle::exact_trd_q(spec, pi, gamma, n * w, 1);
        const auto coarse = oracle::exact_trd_q(spec, pi, gamma, n, w);
        for (int s = 0; s < spec.num_states; ++s) {
            for (int a = 0; a < spec.num_actions; ++a) {
                const RewardVector agg = oracle::aggregate_groups(fine.at(s, a), w);
                for (int i = 0; i <= n; ++i)
                    CHECK(agg[i] == doctest::Approx(coarse.at(s, a)[i]).epsilon(1e-9));
            }
        }
    }
}

TEST_CASE("growing n moves mass from the tail while the sum stays put") {
    const MdpSpec spec = make_periodic_chain(3, 0.1, 4);
    const Policy pi = Policy::uniform(spec);
    const auto small = oracle::exact_trd_q(spec, pi, 0.99, 2, 1);
    const auto large = oracle::exact_trd_q(spec, pi, 0.99, 8, 1);
    CHECK(large.at(0, 0).tail() < small.at(0, 0).tail());
    CHECK(small.at(0, 0).sum() == doctest::Approx(large.at(0, 0).sum()).epsilon(1e-12));
    for (int i = 0; i < 2; ++i)
        CHECK(small.at(0, 0)[i] == doctest::Approx(large.at(0, 0)[i]).epsilon(1e-12));
}

TEST_CASE("monte carlo estimation") {
    SUBCASE("a deterministic spec needs exactly one episode") {
        const MdpSpec spec = make_gridworld_two_paths();
        const Policy down = Policy::deterministic(spec, std::vector<int>(spec.num_states, 1));
        const auto exact = oracle::exact_trd_q(spec, down, 0.95, 4, 1);
        const auto mc = oracle::mc_trd_estimate(spec, down, 0.95, 4, 1, 1, 0);
        for (int s = 0; s < spec.num_states; ++s)
            for (int a = 0; a < spec.num_actions; ++a)
                for (int i = 0; i <= 4; ++i)
                    CHECK(mc.table.at(s, a)[i] ==
                          doctest::Approx(exact.at(s, a)[i]).epsilon(1e-12));
    }
    SUBCASE("sum of element means equals mean of discounted returns on shared trajectories") {
        const MdpSpec spec = make_periodic_chain(3, 0.3, 4);
        const auto mc = oracle::mc_trd_estimate(spec, Policy::uniform(spec), 0.99, 5, 2, 500, 42);
        for (int s = 0; s < spec.num_states; ++s) {
            if (spec.is_terminal(s)) continue;
            for (int a = 0; a < spec.num_actions; ++a)
                CHECK(std::abs(mc.table.at(s, a).sum() - mc.mean_return[s][a]) < 1e-12);
        }
    }
    SUBCASE("gridworld estimates land within 0.02 of the oracle at 10k episodes") {
        const MdpSpec spec = make_gridworld_two_paths();
        const Policy pi = oracle::optimal_policy(spec, 0.95);
        const auto exact = oracle::exact_trd_q(spec, pi, 0.95, 4, 1);
        const auto mc = oracle::mc_trd_estimate(spec, pi, 0.95, 4, 1, 10000, 0);
        for (int s = 0; s < spec.num_states; ++s)
            for (int a = 0; a < spec.num_actions; ++a)
                for (int i = 0; i <= 4; ++i)
                    CHECK(std::abs(mc.table.at(s, a)[i] - exact.at(s, a)[i]) < 0.02);
    }
}

TEST_CASE("optimal policy selection") {
    SUBCASE("the junction prefers down at gamma 0.95") {
        const MdpSpec spec = make_gridworld_two_paths();
        const Policy pi = oracle::optimal_policy(spec, 0.95);
        CHECK(pi.prob(gridworld::kJunction, gridworld::kActionDown) == 1.0);
    }
    SUBCASE("the argmax matches the closed forms at gamma 0.99") {
        const double gamma = 0.99;
        const double up_value = 4.0 * std::pow(gamma, 4);
        const double down_value = gamma + std::pow(gamma, 2) + std::pow(gamma, 3)
                                  + std::pow(gamma, 4);
        const int expected = up_value > down_value ? gridworld::kActionUp
                                                   : gridworld::kActionDown;
        const Policy pi = oracle::optimal_policy(make_gridworld_two_paths(), gamma);
        CHECK(pi.prob(gridworld::kJunction, expected) == 1.0);
    }
    SUBCASE("a single-action spec picks the only action") {
        const MdpSpec spec = make_periodic_chain(3, 0.0, 2);
        const Policy pi = oracle::optimal_policy(spec, 0.99);
        for (int s = 0; s < spec.num_states; ++s) CHECK(pi.prob(s, 0) == 1.0);
    }
}

TEST_CASE("iteration caps turn non-convergence into an error") {
    const MdpSpec spec = make_gridworld_two_paths();
    CHECK_THROWS_AS(
        oracle::exact_q(spec, Policy::uniform(spec), 0.95, oracle::IterationLimits{1e-10, 2}),
        std::runtime_error);
    CHECK_THROWS_AS(oracle::exact_q(spec, Policy::uniform(spec), 1.0), std::invalid_argument);
    CHECK_THROWS_AS(oracle::exact_trd_q(spec, Policy::uniform(spec), 0.95, 0, 1),
                    std::invalid_argument);
}

TEST_CASE("value table CSV export") {
    const MdpSpec spec = make_gridworld_two_paths();
    const auto table = oracle::exact_trd_q(spec, Policy::uniform(spec), 0.95, 2, 1);
    std::ostringstream out;
    oracle::write_csv(table, out);
    const std::string text = out.str();
    CHECK(text.rfind("state,action,element_0,element_1,element_2,scalar_sum\n", 0) == 0);
    int lines = 0;
    for (char c : text)
        if (c == '\n') ++lines;
    CHECK(lines == 1 + spec.num_states * spec.num_actions);
}
