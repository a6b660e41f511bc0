#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "support/fixed_point.hpp"
#include "trd/envs.hpp"
#include "trd/learner.hpp"

using namespace trd;

namespace {

TransitionRecord make_record(double grouped_reward, bool terminated) {
    TransitionRecord rec;
    rec.grouped_reward = grouped_reward;
    rec.terminated_within_w = terminated;
    return rec;
}

RewardVector vec_of(std::vector<double> elements, int w, double gamma) {
    RewardVector v;
    v.n = static_cast<int>(elements.size()) - 1;
    v.w = w;
    v.gamma = gamma;
    v.elements = std::move(elements);
    return v;
}

TrainConfig quick_config() {
    TrainConfig cfg;
    cfg.gamma = 0.95;
    cfg.teacher_steps = 8000;
    cfg.teacher_eval_period = 2000;
    cfg.learning_starts = 200;
    return cfg;
}

}  // namespace

TEST_CASE("scalar bootstrap target") {
    SUBCASE("terminal transitions carry no bootstrap") {
        CHECK(dqn_target_one(make_record(1.0, true), {5.0, 9.0}, 0.99, 1) == 1.0);
    }
    SUBCASE("zero discount reduces to the reward") {
        CHECK(dqn_target_one(make_record(0.75, false), {5.0, 9.0}, 0.0, 1) == 0.75);
    }
    SUBCASE("otherwise reward plus discounted max") {
        CHECK(dqn_target_one(make_record(1.0, false), {5.0, 9.0}, 0.5, 1) ==
              doctest::Approx(1.0 + 0.5 * 9.0));
        CHECK(dqn_target_one(make_record(1.0, false), {5.0, 9.0}, 0.5, 2) ==
              doctest::Approx(1.0 + 0.25 * 9.0));
    }
    SUBCASE("scalar Bellman fixed point on the gridworld") {
        const MdpSpec spec = make_gridworld_two_paths();
        const double gamma = 0.95;
        const auto q = oracle::optimal_q(spec, gamma);
        for (int s = 0; s < spec.num_states; ++s) {
            if (spec.is_terminal(s)) continue;
            for (int a = 0; a < spec.num_actions; ++a) {
                double expected = 0.0;
                for (int sp = 0; sp < spec.num_states; ++sp) {
                    const double p = spec.p(s, a, sp);
                    if (p <= 0.0) continue;
                    TransitionRecord rec = make_record(spec.r(s, a), spec.is_terminal(sp));
                    expected += p * dqn_target_one(rec, q[sp], gamma, 1);
                }
                CHECK(std::abs(expected - q[s][a]) < 1e-9);
            }
        }
    }
}

TEST_CASE("reward-vector bootstrap target") {
    SUBCASE("terminal sample keeps only the observed reward") {
        const auto target = trd_target_one(make_record(1.0, true),
                                           {vec_of({9, 9, 9, 9, 9}, 1, 0.95)}, 0.95, 1);
        CHECK(target == std::vector<double>{1, 0, 0, 0, 0});
    }
    SUBCASE("shift and merge matches the roll semantics") {
        const double a = 0.3, b = -0.2, c = 1.5, d = 0.25, e = 2.0, r = 7.0;
        const auto target =
            trd_target_one(make_record(r, false), {vec_of({a, b, c, d, e}, 1, 1.0)}, 1.0, 1);
        CHECK(target[0] == r);
        CHECK(target[1] == doctest::Approx(a));
        CHECK(target[2] == doctest::Approx(b));
        CHECK(target[3] == doctest::Approx(c));
        CHECK(target[4] == doctest::Approx(d + e));
    }
    SUBCASE("the greedy next action is chosen by summed vectors") {
        const auto worse = vec_of({0.0, 0.0, 1.0}, 1, 0.9);
        const auto better = vec_of({2.0, 0.0, 0.5}, 1, 0.9);
        const auto target =
            trd_target_one(make_record(0.0, false), {worse, better}, 1.0, 1);
        CHECK(target[1] == doctest::Approx(2.0));
    }
    SUBCASE("group width scales the bootstrap by gamma^w") {
        const auto next = vec_of({1.0, 1.0, 1.0}, 2, 0.5);
        const auto target = trd_target_one(make_record(0.0, false), {next}, 0.5, 2);
        CHECK(target[1] == doctest::Approx(0.25));
        CHECK(target[2] == doctest::Approx(0.5));  // 0.25 * (1 + 1)
    }
    SUBCASE("oracle tables are a zero of the target residual") {
        const auto grid = testsupport::check_target_fixed_point(make_gridworld_two_paths(),
                                                                0.95, 4, 1);
        CHECK(grid.max_residual < 1e-9);
        const auto chain =
            testsupport::check_target_fixed_point(make_periodic_chain(3, 0.3, 4), 0.99, 4, 2);
        CHECK(chain.max_residual < 1e-9);
    }
}

TEST_CASE("element-wise squared loss") {
    SUBCASE("exact predictions give zero loss and zero gradients") {
        const auto out = trd_loss({{1, 2, 3}}, {{1, 2, 3}});
        CHECK(out.loss == 0.0);
        for (double g : out.grads[0]) CHECK(g == 0.0);
    }
    SUBCASE("constant offset delta gives loss delta squared") {
        const double delta = 0.35;
        const auto out = trd_loss({{1 + delta, 2 + delta}, {3 + delta, 4 + delta}},
                                  {{1, 2}, {3, 4}});
        CHECK(out.loss == doctest::Approx(delta * delta).epsilon(1e-12));
        CHECK(out.grads[0][0] == doctest::Approx(2.0 * delta / 4.0));
    }
    SUBCASE("shape mismatches are rejected") {
        CHECK_THROWS_AS(trd_loss({{1, 2}}, {{1, 2, 3}}), std::invalid_argument);
        CHECK_THROWS_AS(trd_loss({}, {}), std::invalid_argument);
    }
}

TEST_CASE("distillation loss") {
    SUBCASE("matching policies have zero divergence") {
        const auto out = qdagger_loss({1.0, 0.5, -0.25}, {1.0, 0.5, -0.25}, 1.0, 1.0);
        CHECK(out.loss == doctest::Approx(0.0).epsilon(1e-12));
        for (double g : out.grad_q) CHECK(g == doctest::Approx(0.0).epsilon(1e-12));
    }
    SUBCASE("lambda zero disables the term entirely") {
        const auto out = qdagger_loss({3.0, -1.0}, {0.0, 5.0}, 1.0, 0.0);
        CHECK(out.loss == 0.0);
        for (double g : out.grad_q) CHECK(g == 0.0);
    }
    SUBCASE("two-action closed form against an independent reference") {
        // teacher Q=[1,0], student Q=[0,1], T=1
        const double e = std::exp(1.0);
        const double pt0 = e / (e + 1.0), pt1 = 1.0 / (e + 1.0);
        const double ps0 = 1.0 / (1.0 + e), ps1 = e / (1.0 + e);
        const double kl = pt0 * std::log(pt0 / ps0) + pt1 * std::log(pt1 / ps1);
        const auto out = qdagger_loss({0.0, 1.0}, {1.0, 0.0}, 1.0, 1.0);
        CHECK(out.loss == doctest::Approx(kl).epsilon(1e-12));
        CHECK(out.grad_q[0] == doctest::Approx(ps0 - pt0).epsilon(1e-12));
        CHECK(out.grad_q[1] == doctest::Approx(ps1 - pt1).epsilon(1e-12));
    }
    SUBCASE("temperature scales the gradient") {
        const auto hot = qdagger_loss({2.0, 0.0}, {0.0, 2.0}, 4.0, 1.0);
        const auto cold = qdagger_loss({2.0, 0.0}, {0.0, 2.0}, 0.5, 1.0);
        CHECK(std::abs(hot.grad_q[0]) < std::abs(cold.grad_q[0]));
    }
    SUBCASE("mismatched action sets are rejected") {
        CHECK_THROWS_AS(qdagger_loss({1.0}, {1.0, 2.0}, 1.0, 1.0), std::invalid_argument);
    }
}

TEST_CASE("distillation weight schedule") {
    LambdaSchedule schedule;
    SUBCASE("matching the teacher drives lambda to zero") {
        CHECK(update_lambda(schedule, 4.0, 4.0).lambda == 0.0);
    }
    SUBCASE("a zero-return student keeps full weight") {
        CHECK(update_lambda(schedule, 0.0, 4.0).lambda == 1.0);
    }
    SUBCASE("half the teacher's return gives half weight") {
        CHECK(update_lambda(schedule, 2.0, 4.0).lambda == 0.5);
    }
    SUBCASE("negative student returns clamp at one") {
        CHECK(update_lambda(schedule, -3.0, 4.0).lambda == 1.0);
    }
    SUBCASE("outperforming the teacher clamps at zero") {
        CHECK(update_lambda(schedule, 8.0, 4.0).lambda == 0.0);
    }
    SUBCASE("zero teacher return is a contract violation") {
        CHECK_THROWS_AS(update_lambda(schedule, 1.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("n-step assembly") {
    const Observation o0{{1, 0}}, o1{{0, 1}};
    SUBCASE("grouped rewards discount inside the group") {
        NStepAssembler assembler(2, 0.5);
        auto first = assembler.on_step(o0, 0, 1, 1.0, o1, 1, false, false);
        CHECK(first.empty());
        auto second = assembler.on_step(o1, 1, 0, 2.0, o0, 0, false, false);
        REQUIRE(second.size() == 1);
        CHECK(second[0].grouped_reward == doctest::Approx(1.0 + 0.5 * 2.0));
        CHECK(second[0].state_t == 0);
        CHECK(second[0].action == 1);
        CHECK(second[0].state_t_plus_w == 0);
        CHECK_FALSE(second[0].terminated_within_w);
    }
    SUBCASE("termination inside the group flushes with masked bootstrap") {
        NStepAssembler assembler(3, 0.5);
        assembler.on_step(o0, 0, 0, 1.0, o1, 1, false, false);
        auto flushed = assembler.on_step(o1, 1, 0, 4.0, o0, 2, true, false);
        REQUIRE(flushed.size() == 2);
        CHECK(flushed[0].grouped_reward == doctest::Approx(1.0 + 0.5 * 4.0));
        CHECK(flushed[0].terminated_within_w);
        CHECK(flushed[1].grouped_reward == doctest::Approx(4.0));
        CHECK(flushed[1].terminated_within_w);
    }
    SUBCASE("truncation discards incomplete groups") {
        NStepAssembler assembler(3, 0.5);
        assembler.on_step(o0, 0, 0, 1.0, o1, 1, false, false);
        auto out = assembler.on_step(o1, 1, 0, 1.0, o0, 2, false, true);
        CHECK(out.empty());
        // A fresh episode starts clean: the first step completes nothing.
        auto next = assembler.on_step(o0, 0, 0, 1.0, o1, 1, false, false);
        CHECK(next.empty());
    }
}

TEST_CASE("replay buffer evicts oldest records first") {
    ReplayBuffer buffer(3, 0);
    for (int i = 0; i < 5; ++i) {
        TransitionRecord rec;
        rec.state_t = i;
        buffer.push(std::move(rec));
    }
    CHECK(buffer.size() == 3);
    std::set<int> kept;
    for (std::size_t i = 0; i < buffer.size(); ++i) kept.insert(buffer[i].state_t);
    CHECK(kept == std::set<int>{2, 3, 4});
    CHECK_THROWS_AS(ReplayBuffer(0, 0), std::invalid_argument);
}

TEST_CASE("trajectory logs round-trip through their binary format") {
    TrajectoryLog log;
    log.push(TrajStep{0, 1, 0, 0.5, 2, false, false});
    log.push(TrajStep{0, 2, 1, -1.0, 3, true, false});
    log.push(TrajStep{1, 0, 0, 0.0, 1, false, true});
    const auto path = std::filesystem::temp_directory_path() / "trd_test_log.bin";
    log.save(path);
    const TrajectoryLog loaded = TrajectoryLog::load(path);
    REQUIRE(loaded.size() == 3);
    CHECK(loaded[1].reward == -1.0);
    CHECK(loaded[1].terminated);
    CHECK(loaded[2].truncated);
    CHECK(loaded[2].episode == 1);
}

TEST_CASE("evaluation rollouts") {
    const MdpSpec spec = make_gridworld_two_paths();
    const Policy greedy = oracle::optimal_policy(spec, 0.95);
    const std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9};

    SUBCASE("the greedy policy collects the four coins on every seed") {
        const EvalResult result = evaluate(greedy, spec, seeds, 0.0);
        CHECK(result.mean_return == 4.0);
        for (double r : result.per_seed) CHECK(r == 4.0);
    }
    SUBCASE("a uniform policy cannot beat the optimal return") {
        const Policy uniform = Policy::uniform(spec);
        const EvalResult random = evaluate(uniform, spec, seeds, 1.0);
        const EvalResult best = evaluate(greedy, spec, seeds, 0.0);
        CHECK(random.mean_return <= best.mean_return);
    }
    SUBCASE("repeated evaluation is identical") {
        const EvalResult a = evaluate(greedy, spec, seeds, 0.25);
        const EvalResult b = evaluate(greedy, spec, seeds, 0.25);
        CHECK(a.per_seed == b.per_seed);
    }
}

TEST_CASE("curves CSV labels phases") {
    std::ostringstream out;
    write_curves_csv({EvalRow{0, "offline", 1.0, 0.5, 2.0, 1.0, 0.1},
                      EvalRow{100, "online", 2.0, 1.0, 0.5, 0.0, 0.05}},
                     out);
    const std::string text = out.str();
    CHECK(text.find("step,phase,mean_return,normalized_return,q_mse,lambda,loss") == 0);
    CHECK(text.find(",offline,") != std::string::npos);
    CHECK(text.find(",online,") != std::string::npos);
}

TEST_CASE("teacher training learns the junction decision") {
    const MdpSpec spec = make_gridworld_two_paths();
    const TrainConfig cfg = quick_config();
    const TeacherResult teacher = train_teacher(spec, cfg, 7);

    CHECK(teacher.net.greedy(Observation{spec.obs(gridworld::kJunction)}) ==
          gridworld::kActionDown);
    CHECK(teacher.final_return == 4.0);
    CHECK(teacher.log.size() == static_cast<std::size_t>(cfg.teacher_steps));

    SUBCASE("the run is reproducible") {
        const TeacherResult again = train_teacher(spec, cfg, 7);
        REQUIRE(again.curve.size() == teacher.curve.size());
        for (std::size_t i = 0; i < teacher.curve.size(); ++i) {
            CHECK(again.curve[i].mean_return == teacher.curve[i].mean_return);
            CHECK(again.curve[i].loss == teacher.curve[i].loss);
        }
        const Observation junction{spec.obs(gridworld::kJunction)};
        CHECK(again.net.q_values(junction) == teacher.net.q_values(junction));
    }
}

TEST_CASE("retraining distills the teacher on the feature-split task") {
    // Action choice changes the return here, so the distillation weight is
    // meaningfully nonzero at the start and decays once the student catches up.
    const MdpSpec spec = make_feature_split_env(3);
    TrainConfig cfg;
    cfg.gamma = 0.99;
    cfg.n = 4;
    cfg.w = 1;
    cfg.teacher_steps = 6000;
    cfg.teacher_eval_period = 3000;
    cfg.offline_steps = 1500;
    cfg.offline_eval_period = 250;
    cfg.online_steps = 4000;
    cfg.online_eval_period = 500;
    cfg.learning_starts = 100;

    const TeacherResult teacher = train_teacher(spec, cfg, 3);
    CHECK(teacher.final_return > 0.0);
    const RetrainResult result = retrain_trd(teacher.net, teacher.log, spec, cfg, 3);

    REQUIRE(result.curve.size() > 3);
    bool has_offline = false, has_online = false;
    for (const EvalRow& row : result.curve) {
        CHECK(row.lambda >= 0.0);
        CHECK(row.lambda <= 1.0);
        CHECK(std::isfinite(row.loss));
        if (row.phase == "offline") has_offline = true;
        if (row.phase == "online") has_online = true;
    }
    CHECK(has_offline);
    CHECK(has_online);

    // Once the student first matches the teacher, lambda stays at zero.
    bool matched = false;
    for (const EvalRow& row : result.curve) {
        if (matched) CHECK(row.lambda == 0.0);
        if (row.normalized_return >= 1.0) matched = true;
    }
    CHECK(result.curve.back().normalized_return >= 0.95);
    CHECK(result.curve.back().q_mse < result.curve.front().q_mse);
}

TEST_CASE("terminal samples keep bootstrap elements at exactly zero during training") {
    const MdpSpec spec = make_gridworld_two_paths();
    NStepAssembler assembler(2, 0.95);
    Env env(spec);
    env.reset(0);
    Observation obs = env.observe();
    std::vector<TransitionRecord> terminal_records;
    while (!env.done()) {
        const int s = env.state().current_state;
        const StepResult res = env.step(gridworld::kActionDown);
        for (auto& rec : assembler.on_step(obs, s, gridworld::kActionDown, res.reward, res.obs,
                                           env.state().current_state, res.terminated,
                                           res.truncated))
            if (rec.terminated_within_w) terminal_records.push_back(rec);
        obs = res.obs;
    }
    REQUIRE(!terminal_records.empty());
    const auto next = vec_of({9, 9, 9, 9, 9}, 2, 0.95);
    for (const auto& rec : terminal_records) {
        const auto target = trd_target_one(rec, {next, next}, 0.95, 2);
        for (std::size_t i = 1; i < target.size(); ++i) CHECK(target[i] == 0.0);
    }
}

TEST_CASE("config validation rejects out-of-range settings") {
    TrainConfig cfg;
    cfg.gamma = 1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.epsilon = 1.5;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.qdagger_temperature = 0.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.n = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = TrainConfig{};
    cfg.eval_seeds.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}
