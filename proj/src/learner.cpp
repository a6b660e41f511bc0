#include "trd/learner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>
#include <stdexcept>

#include "trd/rng.hpp"

namespace trd {

namespace {

int argmax_lowest(const std::vector<double>& values) {
    int best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best]) best = static_cast<int>(i);
    return best;
}

std::vector<double> softmax(const std::vector<double>& logits, double temperature) {
    std::vector<double> p(logits.size());
    double max_logit = logits[0];
    for (double v : logits) max_logit = std::max(max_logit, v);
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp((logits[i] - max_logit) / temperature);
        total += p[i];
    }
    for (double& v : p) v /= total;
    return p;
}

void format_row(std::ostream& out, const EvalRow& row) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%ld,%s,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.step,
                  row.phase.c_str(), row.mean_return, row.normalized_return, row.q_mse,
                  row.lambda, row.loss);
    out << buf;
}

}  // namespace

void TrainConfig::validate() const {
    if (gamma < 0.0 || gamma >= 1.0) throw std::invalid_argument("config: gamma must be in [0, 1)");
    if (buffer_capacity == 0) throw std::invalid_argument("config: buffer_capacity must be positive");
    if (batch_size < 1) throw std::invalid_argument("config: batch_size must be positive");
    if (target_update_period < 1)
        throw std::invalid_argument("config: target_update_period must be positive");
    if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("config: epsilon must be in [0, 1]");
    if (train_frequency < 1) throw std::invalid_argument("config: train_frequency must be positive");
    if (qdagger_temperature <= 0.0)
        throw std::invalid_argument("config: qdagger_temperature must be positive");
    if (teacher_steps < 0 || offline_steps < 0 || online_steps < 0)
        throw std::invalid_argument("config: step counts must be non-negative");
    if (eval_seeds.empty()) throw std::invalid_argument("config: eval_seeds must not be empty");
    if (teacher_eval_period < 1 || offline_eval_period < 1 || online_eval_period < 1)
        throw std::invalid_argument("config: evaluation periods must be positive");
    if (n < 1 || w < 1) throw std::invalid_argument("config: n and w must be >= 1");
    if (learning_rate <= 0.0 || tabular_learning_rate <= 0.0)
        throw std::invalid_argument("config: learning rates must be positive");
    if (tabular_updates < 0) throw std::invalid_argument("config: tabular_updates must be non-negative");
    if (learning_starts < 1) throw std::invalid_argument("config: learning_starts must be positive");
    if (teacher_exploration_final < 0.0 || teacher_exploration_final > 1.0 ||
        teacher_exploration_fraction <= 0.0 || teacher_exploration_fraction > 1.0)
        throw std::invalid_argument("config: teacher exploration schedule out of range");
    if (hidden_layers < 1 || hidden_width < 1)
        throw std::invalid_argument("config: hidden architecture must be non-empty");
}

LambdaSchedule update_lambda(const LambdaSchedule& schedule, double student_return,
                             double teacher_return) {
    if (teacher_return == 0.0)
        throw std::invalid_argument("update_lambda: teacher return must be nonzero");
    LambdaSchedule next = schedule;
    next.teacher_return = teacher_return;
    next.student_return = student_return;
    next.lambda = std::clamp(1.0 - student_return / teacher_return, 0.0, 1.0);
    return next;
}

double dqn_target_one(const TransitionRecord& rec, const std::vector<double>& next_q,
                      double gamma, int w) {
    double target = rec.grouped_reward;
    if (!rec.terminated_within_w) {
        const double best = *std::max_element(next_q.begin(), next_q.end());
        target += std::pow(gamma, static_cast<double>(w)) * best;
    }
    if (!std::isfinite(target)) throw std::runtime_error("dqn_target: non-finite target");
    return target;
}

std::vector<double> trd_target_one(const TransitionRecord& rec,
                                   const std::vector<RewardVector>& next_vectors,
                                   double gamma, int w) {
    const int n = next_vectors.front().n;
    std::vector<double> target(n + 1, 0.0);
    target[0] = rec.grouped_reward;
    if (!rec.terminated_within_w) {
        std::vector<double> sums(next_vectors.size());
        for (std::size_t a = 0; a < next_vectors.size(); ++a) sums[a] = next_vectors[a].sum();
        const RewardVector& next = next_vectors[argmax_lowest(sums)];
        const double scale = std::pow(gamma, static_cast<double>(w));
        for (int i = 1; i < n; ++i) target[i] = scale * next[i - 1];
        target[n] = scale * (next[n - 1] + next[n]);
    }
    for (double v : target)
        if (!std::isfinite(v)) throw std::runtime_error("trd_target: non-finite target");
    return target;
}

TrdLoss trd_loss(const std::vector<std::vector<double>>& preds,
                 const std::vector<std::vector<double>>& targets) {
    if (preds.size() != targets.size() || preds.empty())
        throw std::invalid_argument("trd_loss: batch shape mismatch");
    TrdLoss out;
    out.grads.resize(preds.size());
    const double denom = static_cast<double>(preds.size()) * preds[0].size();
    for (std::size_t b = 0; b < preds.size(); ++b) {
        if (preds[b].size() != targets[b].size())
            throw std::invalid_argument("trd_loss: vector length mismatch");
        out.grads[b].resize(preds[b].size());
        for (std::size_t i = 0; i < preds[b].size(); ++i) {
            const double diff = preds[b][i] - targets[b][i];
            out.loss += diff * diff / denom;
            out.grads[b][i] = 2.0 * diff / denom;
        }
    }
    return out;
}

DistillLoss qdagger_loss(const std::vector<double>& student_q,
                         const std::vector<double>& teacher_q, double temperature,
                         double lambda) {
    if (student_q.size() != teacher_q.size() || student_q.empty())
        throw std::invalid_argument("qdagger_loss: action sets differ");
    if (temperature <= 0.0) throw std::invalid_argument("qdagger_loss: temperature must be positive");

    DistillLoss out;
    out.grad_q.assign(student_q.size(), 0.0);
    if (lambda == 0.0) return out;

    const auto p_teacher = softmax(teacher_q, temperature);
    const auto p_student = softmax(student_q, temperature);
    double kl = 0.0;
    for (std::size_t a = 0; a < student_q.size(); ++a) {
        if (p_teacher[a] > 0.0) kl += p_teacher[a] * (std::log(p_teacher[a]) - std::log(p_student[a]));
        out.grad_q[a] = lambda * (p_student[a] - p_teacher[a]) / temperature;
    }
    out.loss = lambda * kl;
    if (!std::isfinite(out.loss)) throw std::runtime_error("qdagger_loss: non-finite loss");
    return out;
}

EvalResult evaluate(const ActionFn& act, const MdpSpec& spec,
                    const std::vector<std::uint64_t>& seeds, double epsilon) {
    EvalResult result;
    result.per_seed.reserve(seeds.size());
    for (std::uint64_t seed : seeds) {
        Env env(spec);
        env.reset(seed);
        auto gen = rng::substream(seed, "eval");
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        std::uniform_int_distribution<int> uniform_action(0, spec.num_actions - 1);
        double episode_return = 0.0;
        while (!env.done()) {
            int action;
            if (epsilon > 0.0 && unit(gen) < epsilon) {
                action = uniform_action(gen);
            } else {
                action = act(env);
            }
            episode_return += env.step(action).reward;
        }
        result.per_seed.push_back(episode_return);
        result.mean_return += episode_return;
    }
    result.mean_return /= static_cast<double>(seeds.size());
    return result;
}

EvalResult evaluate(const TrdEstimator& est, const MdpSpec& spec,
                    const std::vector<std::uint64_t>& seeds, double epsilon) {
    return evaluate([&est](const Env& env) { return greedy_action(est, env.observe()); }, spec,
                    seeds, epsilon);
}

EvalResult evaluate(const ScalarQNet& net, const MdpSpec& spec,
                    const std::vector<std::uint64_t>& seeds, double epsilon) {
    return evaluate([&net](const Env& env) { return net.greedy(env.observe()); }, spec, seeds,
                    epsilon);
}

EvalResult evaluate(const Policy& policy, const MdpSpec& spec,
                    const std::vector<std::uint64_t>& seeds, double epsilon) {
    return evaluate(
        [&policy](const Env& env) {
            const int s = env.state().current_state;
            return argmax_lowest(std::vector<double>(
                policy.action_prob.begin() + static_cast<std::size_t>(s) * policy.num_actions,
                policy.action_prob.begin() + static_cast<std::size_t>(s + 1) * policy.num_actions));
        },
        spec, seeds, epsilon);
}

void write_curves_csv(const std::vector<EvalRow>& rows, std::ostream& out) {
    out << "step,phase,mean_return,normalized_return,q_mse,lambda,loss\n";
    for (const EvalRow& row : rows) format_row(out, row);
}

TeacherResult train_teacher(const MdpSpec& spec, const TrainConfig& config,
                            std::uint64_t seed) {
    config.validate();
    const int A = spec.num_actions;

    TeacherResult result{ScalarQNet(spec.obs_dim(), A, config.gamma, config.hidden_widths(),
                                    rng::derive(seed, "teacher-init")),
                         TrajectoryLog{}, {}, 0.0};
    ScalarQNet& net = result.net;
    Mlp target = net.net();
    Adam adam(net.net(), AdamConfig{config.learning_rate});
    ReplayBuffer buffer(config.buffer_capacity, rng::derive(seed, "teacher-sample"));

    Env env(spec);
    std::uint32_t episode = 0;
    Observation obs = env.reset(rng::derive(seed, "teacher-episode", episode));
    auto collect_gen = rng::substream(seed, "teacher-collect");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> uniform_action(0, A - 1);

    const double anneal_steps =
        std::max(1.0, config.teacher_exploration_fraction * config.teacher_steps);
    double last_loss = 0.0;
    int updates = 0;

    for (int step = 0; step < config.teacher_steps; ++step) {
        if (step % config.teacher_eval_period == 0) {
            const EvalResult eval = evaluate(net, spec, config.eval_seeds, config.epsilon);
            result.curve.push_back(EvalRow{step, "teacher", eval.mean_return, 0.0, 0.0, 0.0,
                                           last_loss});
        }

        const double explore = std::max(
            config.teacher_exploration_final,
            1.0 - (1.0 - config.teacher_exploration_final) * (step / anneal_steps));
        const int state = env.state().current_state;
        const int action =
            unit(collect_gen) < explore ? uniform_action(collect_gen) : net.greedy(obs);
        const StepResult res = env.step(action);

        result.log.push(TrajStep{episode, state, action, res.reward,
                                 env.state().current_state, res.terminated, res.truncated});
        TransitionRecord rec;
        rec.obs_t = obs;
        rec.state_t = state;
        rec.action = action;
        rec.grouped_reward = res.reward;
        rec.obs_t_plus_w = res.obs;
        rec.state_t_plus_w = env.state().current_state;
        rec.terminated_within_w = res.terminated;
        buffer.push(std::move(rec));

        obs = res.obs;
        if (env.done()) {
            ++episode;
            obs = env.reset(rng::derive(seed, "teacher-episode", episode));
        }

        if (buffer.size() >= static_cast<std::size_t>(config.learning_starts) &&
            (step + 1) % config.train_frequency == 0) {
            const auto batch = buffer.sample(config.batch_size);
            GradientBundle grads = net.net().zero_grads();
            double loss = 0.0;
            for (const TransitionRecord* r : batch) {
                const double y = dqn_target_one(
                    *r, target.forward(r->obs_t_plus_w.features).output(), config.gamma, 1);
                const MlpForward fwd = net.net().forward(r->obs_t.features);
                const double diff = fwd.output()[r->action] - y;
                loss += diff * diff / batch.size();
                std::vector<double> upstream(A, 0.0);
                upstream[r->action] = 2.0 * diff / batch.size();
                grads.add(net.net().backward(fwd, upstream).grads);
            }
            adam.step(net.net(), grads);
            last_loss = loss;
            ++updates;
            if (updates % config.target_update_period == 0) target = net.net();
        }
    }

    const EvalResult final_eval = evaluate(net, spec, config.eval_seeds, config.epsilon);
    result.final_return = final_eval.mean_return;
    result.curve.push_back(
        EvalRow{config.teacher_steps, "teacher", final_eval.mean_return, 0.0, 0.0, 0.0, last_loss});
    return result;
}

namespace {

// Shared update step for the two retraining phases.
class StudentTrainer {
  public:
    StudentTrainer(NeuralTrd& student, const ScalarQNet* teacher, const TrainConfig& config)
        : student_(student),
          teacher_(teacher),
          config_(config),
          target_(student.net()),
          adam_(student.net(), AdamConfig{config.learning_rate}) {}

    double update(ReplayBuffer& buffer, double lambda) {
        const auto batch = buffer.sample(config_.batch_size);
        const int n = student_.horizon_n();
        const int A = student_.num_actions();
        const int out_dim = A * (n + 1);
        GradientBundle grads = student_.net().zero_grads();
        double loss = 0.0;

        for (const TransitionRecord* rec : batch) {
            const auto next_vectors = target_vectors(rec->obs_t_plus_w);
            const MlpForward fwd = student_.net().forward(rec->obs_t.features);
            const auto& out = fwd.output();
            std::vector<double> upstream(out_dim, 0.0);

            if (config_.naive_summed_loss) {
                std::vector<double> next_sums(A);
                for (int a = 0; a < A; ++a) next_sums[a] = next_vectors[a].sum();
                const double y = dqn_target_one(*rec, next_sums, config_.gamma, config_.w);
                double pred_sum = 0.0;
                for (int i = 0; i <= n; ++i) pred_sum += out[student_.flat_index(rec->action, i)];
                const double diff = pred_sum - y;
                loss += diff * diff / batch.size();
                for (int i = 0; i <= n; ++i)
                    upstream[student_.flat_index(rec->action, i)] = 2.0 * diff / batch.size();
            } else {
                const auto target_vec = trd_target_one(*rec, next_vectors, config_.gamma, config_.w);
                std::vector<double> pred(n + 1);
                for (int i = 0; i <= n; ++i) pred[i] = out[student_.flat_index(rec->action, i)];
                const TrdLoss element_loss = trd_loss({pred}, {target_vec});
                loss += element_loss.loss / batch.size();
                for (int i = 0; i <= n; ++i)
                    upstream[student_.flat_index(rec->action, i)] =
                        element_loss.grads[0][i] / batch.size();
            }

            if (teacher_ != nullptr && lambda > 0.0 && !rec->teacher_scalar_q.empty()) {
                std::vector<double> student_q(A, 0.0);
                for (int a = 0; a < A; ++a)
                    for (int i = 0; i <= n; ++i) student_q[a] += out[student_.flat_index(a, i)];
                const DistillLoss distill = qdagger_loss(student_q, rec->teacher_scalar_q,
                                                         config_.qdagger_temperature, lambda);
                loss += distill.loss / batch.size();
                for (int a = 0; a < A; ++a)
                    for (int i = 0; i <= n; ++i)
                        upstream[student_.flat_index(a, i)] += distill.grad_q[a] / batch.size();
            }

            grads.add(student_.net().backward(fwd, upstream).grads);
        }

        adam_.step(student_.net(), grads);
        ++updates_;
        if (updates_ % config_.target_update_period == 0) target_ = student_.net();
        return loss;
    }

  private:
    std::vector<RewardVector> target_vectors(const Observation& obs) const {
        const auto out = target_.forward(obs.features).output();
        const int n = student_.horizon_n();
        std::vector<RewardVector> vectors(student_.num_actions(),
                                          RewardVector::zeros(n, student_.group_w(),
                                                              student_.gamma()));
        for (int a = 0; a < student_.num_actions(); ++a)
            for (int i = 0; i <= n; ++i) vectors[a][i] = out[student_.flat_index(a, i)];
        return vectors;
    }

    NeuralTrd& student_;
    const ScalarQNet* teacher_;
    const TrainConfig& config_;
    Mlp target_;
    Adam adam_;
    long updates_ = 0;
};

double student_teacher_mse(const NeuralTrd& student, const ScalarQNet& teacher,
                           const MdpSpec& spec, const std::set<int>& states) {
    double mse = 0.0;
    int count = 0;
    for (int s : states) {
        if (spec.is_terminal(s)) continue;
        const Observation obs{spec.obs(s)};
        const auto sq = scalar_q(student, obs);
        const auto tq = teacher.q_values(obs);
        for (int a = 0; a < spec.num_actions; ++a) {
            const double diff = sq[a] - tq[a];
            mse += diff * diff;
            ++count;
        }
    }
    return count > 0 ? mse / count : 0.0;
}

}  // namespace

RetrainResult retrain_trd(const ScalarQNet& teacher, const TrajectoryLog& teacher_log,
                          const MdpSpec& spec, const TrainConfig& config,
                          std::uint64_t seed) {
    config.validate();
    if (teacher_log.size() == 0)
        throw std::invalid_argument("retrain_trd: teacher log is empty");
    if (teacher.obs_dim() != spec.obs_dim() || teacher.num_actions() != spec.num_actions)
        throw std::invalid_argument("retrain_trd: teacher shape does not match environment");

    RetrainResult result{NeuralTrd(spec.obs_dim(), spec.num_actions, config.n, config.w,
                                   config.gamma, config.hidden_widths(),
                                   rng::derive(seed, "student-init")),
                         {}, 0.0};
    NeuralTrd& student = result.student;
    StudentTrainer trainer(student, &teacher, config);

    result.teacher_return =
        evaluate(teacher, spec, config.eval_seeds, config.epsilon).mean_return;

    // The teacher's stream re-grouped at the student's width, with the
    // teacher's Q attached for distillation.
    std::set<int> visited;
    for (std::size_t i = 0; i < teacher_log.size(); ++i) {
        visited.insert(teacher_log[i].state);
        visited.insert(teacher_log[i].next_state);
    }
    auto offline_records = assemble_records(teacher_log, spec, config.w, config.gamma);
    if (offline_records.empty())
        throw std::invalid_argument("retrain_trd: teacher log yields no complete records");
    ReplayBuffer offline_buffer(std::max(offline_records.size(), std::size_t{1}),
                                rng::derive(seed, "offline-sample"));
    for (auto& rec : offline_records) {
        rec.teacher_scalar_q = teacher.q_values(rec.obs_t);
        offline_buffer.push(std::move(rec));
    }

    LambdaSchedule lambda;
    double last_loss = 0.0;
    auto record_eval = [&](long step, const std::string& phase) {
        const EvalResult eval = evaluate(student, spec, config.eval_seeds, config.epsilon);
        lambda = update_lambda(lambda, eval.mean_return, result.teacher_return);
        result.curve.push_back(EvalRow{step, phase, eval.mean_return,
                                       eval.mean_return / result.teacher_return,
                                       student_teacher_mse(student, teacher, spec, visited),
                                       lambda.lambda, last_loss});
    };

    for (int step = 0; step < config.offline_steps; ++step) {
        if (step % config.offline_eval_period == 0) record_eval(step, "offline");
        last_loss = trainer.update(offline_buffer, lambda.lambda);
    }

    ReplayBuffer online_buffer(config.buffer_capacity, rng::derive(seed, "online-sample"));
    NStepAssembler assembler(config.w, config.gamma);
    Env env(spec);
    std::uint32_t episode = 0;
    Observation obs = env.reset(rng::derive(seed, "student-episode", episode));
    auto collect_gen = rng::substream(seed, "student-collect");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> uniform_action(0, spec.num_actions - 1);

    for (int step = 0; step < config.online_steps; ++step) {
        if (step % config.online_eval_period == 0)
            record_eval(config.offline_steps + step, "online");

        const int state = env.state().current_state;
        const int action = unit(collect_gen) < config.epsilon ? uniform_action(collect_gen)
                                                              : greedy_action(student, obs);
        const StepResult res = env.step(action);
        auto completed = assembler.on_step(obs, state, action, res.reward, res.obs,
                                           env.state().current_state, res.terminated,
                                           res.truncated);
        for (auto& rec : completed) {
            rec.teacher_scalar_q = teacher.q_values(rec.obs_t);
            online_buffer.push(std::move(rec));
        }
        obs = res.obs;
        if (env.done()) {
            ++episode;
            obs = env.reset(rng::derive(seed, "student-episode", episode));
        }

        if (online_buffer.size() >= static_cast<std::size_t>(
                                        std::min(config.learning_starts, config.batch_size)) &&
            (step + 1) % config.train_frequency == 0) {
            last_loss = trainer.update(online_buffer, lambda.lambda);
        }
    }
    record_eval(config.offline_steps + config.online_steps, "online");
    return result;
}

TabularTrd train_tabular_trd(const MdpSpec& spec, const TrainConfig& config,
                             std::uint64_t seed) {
    config.validate();
    TabularTrd table(spec.num_states, spec.num_actions, config.n, config.w, config.gamma);

    NStepAssembler assembler(config.w, config.gamma);
    Env env(spec);
    std::uint32_t episode = 0;
    Observation obs = env.reset(rng::derive(seed, "tabular-episode", episode));
    auto collect_gen = rng::substream(seed, "tabular-collect");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_int_distribution<int> uniform_action(0, spec.num_actions - 1);
    const double anneal_steps = std::max(1.0, 0.5 * config.tabular_updates);

    int updates = 0;
    long step = 0;
    while (updates < config.tabular_updates) {
        const double explore = std::max(
            config.teacher_exploration_final,
            1.0 - (1.0 - config.teacher_exploration_final) * (step / anneal_steps));
        const int state = env.state().current_state;
        std::vector<double> sums(spec.num_actions);
        for (int a = 0; a < spec.num_actions; ++a) sums[a] = table.at(state, a).sum();
        const int action = unit(collect_gen) < explore ? uniform_action(collect_gen)
                                                       : argmax_lowest(sums);
        const StepResult res = env.step(action);
        auto completed = assembler.on_step(obs, state, action, res.reward, res.obs,
                                           env.state().current_state, res.terminated,
                                           res.truncated);
        for (const TransitionRecord& rec : completed) {
            if (updates >= config.tabular_updates) break;
            const auto target =
                trd_target_one(rec, table.vectors_for_state(rec.state_t_plus_w), config.gamma,
                               config.w);
            table.update_toward(rec.state_t, rec.action, target, config.tabular_learning_rate);
            ++updates;
        }
        obs = res.obs;
        ++step;
        if (env.done()) {
            ++episode;
            obs = env.reset(rng::derive(seed, "tabular-episode", episode));
        }
    }
    return table;
}

}  // namespace trd
