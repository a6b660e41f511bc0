#include "trd/commands.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>

#include "trd/envs.hpp"
#include "trd/explain.hpp"
#include "trd/learner.hpp"
#include "trd/weights_io.hpp"

namespace trd::commands {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

void write_curves(const std::vector<EvalRow>& rows, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write curves: " + path.string());
    write_curves_csv(rows, out);
}

int default_initial_state(const MdpSpec& spec) {
    for (int s = 0; s < spec.num_states; ++s)
        if (spec.initial_dist[s] > 0.0) return s;
    throw std::runtime_error("environment has no initial state");
}

int resolve_state_selector(const MdpSpec& spec, const std::string& selector) {
    if (selector == "initial") return default_initial_state(spec);
    int state = 0;
    try {
        state = std::stoi(selector);
    } catch (const std::exception&) {
        throw std::invalid_argument("state selector must be 'initial' or a state index, got '" +
                                    selector + "'");
    }
    if (state < 0 || state >= spec.num_states)
        throw std::invalid_argument("state selector out of range: " + selector);
    return state;
}

std::string extension(explain::ArtifactFormat format) {
    switch (format) {
        case explain::ArtifactFormat::kCsv: return ".csv";
        case explain::ArtifactFormat::kJson: return ".json";
        case explain::ArtifactFormat::kSvg: return ".svg";
    }
    return ".csv";
}

// Reward-vector estimators loaded for verify/explain; scalar teacher files
// are rejected with a pointed message.
struct VectorEstimator {
    LoadedWeights loaded;

    const TrdEstimator& get() const {
        if (loaded.neural) return *loaded.neural;
        return *loaded.tabular;
    }
    bool is_neural() const { return loaded.neural.has_value(); }
};

VectorEstimator load_vector_estimator(const fs::path& path) {
    VectorEstimator est{load_weights(path)};
    if (est.loaded.scalar_q)
        throw std::runtime_error(
            "weight file holds a scalar Q teacher; a reward-vector estimator is required");
    return est;
}

std::vector<RewardVector> estimator_vectors(const VectorEstimator& est, const MdpSpec& spec,
                                            int state) {
    if (est.loaded.tabular) return est.loaded.tabular->vectors_for_state(state);
    return est.loaded.neural->predict_vector(Observation{spec.obs(state)});
}

}  // namespace

RunConfig load_config(const CommonOptions& options) {
    RunConfig cfg = load_run_config(options.config_path);
    if (options.out_override) cfg.out_dir = *options.out_override;
    if (options.seed_override) cfg.seed = *options.seed_override;
    if (options.format_override) cfg.explain.format = *options.format_override;
    return cfg;
}

int cmd_train_teacher(const CommonOptions& options) {
    RunConfig cfg = load_config(options);
    const MdpSpec spec = cfg.make_env();
    RunManifest manifest;
    manifest.command = "train-teacher";
    manifest.resolved_config = cfg.to_json();
    manifest.started_at = utc_timestamp();

    TeacherResult result = train_teacher(spec, cfg.train, cfg.seed);

    fs::create_directories(cfg.out_dir);
    const fs::path weights_path = cfg.out_dir / "teacher.weights";
    const fs::path log_path = cfg.out_dir / "teacher.log";
    const fs::path curves_path = cfg.out_dir / "teacher_curves.csv";
    save_weights(result.net, weights_path);
    result.log.save(log_path);
    write_curves(result.curve, curves_path);

    Env env(spec);
    const Observation initial = env.reset(cfg.seed);
    manifest.finished_at = utc_timestamp();
    manifest.evals = result.curve;
    manifest.artifacts = {log_path.string(), curves_path.string()};
    manifest.weights_file = weights_path.string();
    manifest.weights_digest = file_digest_hex(weights_path);
    manifest.extra = nlohmann::json{{"final_return", result.final_return},
                                    {"greedy_initial_action", result.net.greedy(initial)},
                                    {"collected_steps", result.log.size()}};
    write_manifest_atomic(manifest, cfg.out_dir / "manifest_train_teacher.json");

    std::cout << "teacher trained: return " << fmt(result.final_return) << ", weights "
              << weights_path.string() << "\n";
    return 0;
}

int cmd_retrain_trd(const CommonOptions& options, const fs::path& teacher_weights,
                    const fs::path& teacher_buffer) {
    RunConfig cfg = load_config(options);
    const MdpSpec spec = cfg.make_env();
    const ScalarQNet teacher = load_scalar_q(teacher_weights);
    if (teacher.obs_dim() != spec.obs_dim() || teacher.num_actions() != spec.num_actions)
        throw std::runtime_error("teacher weights do not match the configured environment");
    const TrajectoryLog log = TrajectoryLog::load(teacher_buffer);

    RunManifest manifest;
    manifest.command = "retrain-trd";
    manifest.resolved_config = cfg.to_json();
    manifest.started_at = utc_timestamp();

    RetrainResult result = retrain_trd(teacher, log, spec, cfg.train, cfg.seed);

    fs::create_directories(cfg.out_dir);
    const fs::path weights_path = cfg.out_dir / "student.weights";
    const fs::path curves_path = cfg.out_dir / "retrain_curves.csv";
    save_weights(result.student, weights_path);
    write_curves(result.curve, curves_path);

    manifest.finished_at = utc_timestamp();
    manifest.evals = result.curve;
    manifest.artifacts = {curves_path.string()};
    manifest.weights_file = weights_path.string();
    manifest.weights_digest = file_digest_hex(weights_path);
    const EvalRow& last = result.curve.back();
    manifest.extra = nlohmann::json{{"teacher_return", result.teacher_return},
                                    {"final_normalized_return", last.normalized_return},
                                    {"final_q_mse", last.q_mse}};
    write_manifest_atomic(manifest, cfg.out_dir / "manifest_retrain.json");

    std::cout << "student retrained: normalized return " << fmt(last.normalized_return)
              << ", q mse " << fmt(last.q_mse) << ", weights " << weights_path.string() << "\n";
    return 0;
}

int cmd_verify(const CommonOptions& options, const fs::path& weights) {
    RunConfig cfg = load_config(options);
    const MdpSpec spec = cfg.make_env();
    const VectorEstimator est = load_vector_estimator(weights);
    const TrdEstimator& trd_est = est.get();

    if (trd_est.horizon_n() != cfg.train.n || trd_est.group_w() != cfg.train.w)
        throw std::runtime_error(
            "estimator shape mismatch: weights have n=" + std::to_string(trd_est.horizon_n()) +
            ", w=" + std::to_string(trd_est.group_w()) + " but config requests n=" +
            std::to_string(cfg.train.n) + ", w=" + std::to_string(cfg.train.w));
    if (est.is_neural() && trd_est.obs_dim() != spec.obs_dim())
        throw std::runtime_error("estimator observation dimension does not match environment");

    const Policy greedy = oracle::optimal_policy(spec, trd_est.gamma());
    const auto oracle_table = oracle::exact_trd_q(spec, greedy, trd_est.gamma(),
                                                  trd_est.horizon_n(), trd_est.group_w());
    const auto oracle_scalar = oracle::exact_q(spec, greedy, trd_est.gamma());

    double max_element_err = 0.0;
    double max_scalar_residual = 0.0;
    for (int s = 0; s < spec.num_states; ++s) {
        if (spec.is_terminal(s)) continue;
        const auto vectors = estimator_vectors(est, spec, s);
        for (int a = 0; a < spec.num_actions; ++a) {
            for (int i = 0; i <= trd_est.horizon_n(); ++i)
                max_element_err =
                    std::max(max_element_err, std::abs(vectors[a][i] - oracle_table.at(s, a)[i]));
            max_scalar_residual =
                std::max(max_scalar_residual, std::abs(vectors[a].sum() - oracle_scalar[s][a]));
        }
    }

    const bool pass = max_element_err < cfg.verify.elementwise_tolerance &&
                      max_scalar_residual < cfg.verify.scalar_tolerance;
    std::cout << "elementwise_max_error: " << fmt(max_element_err) << "\n"
              << "scalar_sum_residual: " << fmt(max_scalar_residual) << "\n"
              << "elementwise_tolerance: " << fmt(cfg.verify.elementwise_tolerance) << "\n"
              << "scalar_tolerance: " << fmt(cfg.verify.scalar_tolerance) << "\n"
              << "verify: " << (pass ? "PASS" : "FAIL") << "\n";
    return pass ? 0 : 1;
}

int cmd_explain(const CommonOptions& options, const fs::path& weights,
                const std::optional<std::string>& subkind_override,
                const std::optional<std::string>& state_override) {
    RunConfig cfg = load_config(options);
    if (subkind_override) {
        static const std::set<std::string> kinds = {"timeline", "confidence", "saliency",
                                                    "contrast"};
        if (!kinds.count(*subkind_override))
            throw std::invalid_argument("unknown explain subkind: " + *subkind_override);
        cfg.explain.subkind = *subkind_override;
    }
    if (state_override) cfg.explain.state = *state_override;

    const MdpSpec spec = cfg.make_env();
    const VectorEstimator est = load_vector_estimator(weights);
    const TrdEstimator& trd_est = est.get();
    if (est.is_neural() && trd_est.obs_dim() != spec.obs_dim())
        throw std::runtime_error("estimator observation dimension does not match environment");

    const explain::ArtifactFormat format = explain::parse_format(cfg.explain.format);
    const std::string ext = extension(format);
    const int state = resolve_state_selector(spec, cfg.explain.state);
    const Observation obs{spec.obs(state)};

    RunManifest manifest;
    manifest.command = "explain";
    manifest.resolved_config = cfg.to_json();
    manifest.started_at = utc_timestamp();
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> artifacts;

    const auto& sub = cfg.explain.subkind;
    if (sub == "timeline" && cfg.explain.episode) {
        // One timeline artifact per visited state along a greedy rollout.
        Env env(spec);
        env.reset(cfg.seed);
        int step = 0;
        while (!env.done() && step < spec.max_episode_steps) {
            const Observation step_obs = env.observe();
            const auto timeline = explain::reward_timeline(trd_est, step_obs, cfg.explain.action);
            char name[64];
            std::snprintf(name, sizeof(name), "explain_timeline_step%03d%s", step, ext.c_str());
            const fs::path path = cfg.out_dir / name;
            explain::export_artifact(timeline, path, format);
            artifacts.push_back(path.string());
            env.step(timeline.action);
            ++step;
        }
    } else if (sub == "timeline") {
        const auto timeline = explain::reward_timeline(trd_est, obs, cfg.explain.action);
        const fs::path path = cfg.out_dir / ("explain_timeline" + ext);
        explain::export_artifact(timeline, path, format);
        artifacts.push_back(path.string());
    } else if (sub == "confidence") {
        const auto timeline = explain::confidence_timeline(trd_est, spec, obs, cfg.explain.action);
        const fs::path path = cfg.out_dir / ("explain_confidence" + ext);
        explain::export_artifact(timeline, path, format);
        artifacts.push_back(path.string());
    } else if (sub == "saliency") {
        if (!est.is_neural())
            throw std::runtime_error("saliency requires a neural estimator (gradients)");
        const NeuralTrd& neural = *est.loaded.neural;
        const int action = cfg.explain.action.value_or(greedy_action(neural, obs));
        const auto map_a = explain::element_saliency(neural, obs, cfg.explain.element, action);
        const fs::path path_a = cfg.out_dir / ("explain_saliency" + ext);
        explain::export_artifact(map_a, path_a, format);
        artifacts.push_back(path_a.string());
        if (cfg.explain.element_b) {
            const auto map_b =
                explain::element_saliency(neural, obs, *cfg.explain.element_b, action);
            const auto diff = explain::saliency_diff(map_b, map_a);
            const fs::path path_b = cfg.out_dir / ("explain_saliency_b" + ext);
            const fs::path path_diff = cfg.out_dir / ("explain_saliency_diff" + ext);
            explain::export_artifact(map_b, path_b, format);
            explain::export_artifact(diff, path_diff, format);
            artifacts.push_back(path_b.string());
            artifacts.push_back(path_diff.string());
        }
    } else {  // contrast
        const int action_a = cfg.explain.action.value_or(0);
        const auto contrast =
            explain::contrast_actions(trd_est, obs, action_a, cfg.explain.action_b);
        const fs::path path = cfg.out_dir / ("explain_contrast" + ext);
        explain::export_artifact(contrast, path, format);
        artifacts.push_back(path.string());
    }

    manifest.finished_at = utc_timestamp();
    manifest.artifacts = artifacts;
    manifest.weights_file = weights.string();
    manifest.weights_digest = file_digest_hex(weights);
    manifest.extra = nlohmann::json{{"state", state}};
    write_manifest_atomic(manifest, cfg.out_dir / "manifest_explain.json");

    for (const std::string& artifact : artifacts) std::cout << "wrote " << artifact << "\n";
    return 0;
}

}  // namespace trd::commands
