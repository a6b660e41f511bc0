#include "trd/config.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <set>
#include <stdexcept>

#include "trd/envs.hpp"

namespace trd {

namespace {

using nlohmann::json;

void reject_unknown(const json& section, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = section.begin(); it != section.end(); ++it) {
        if (!allowed.count(it.key()))
            throw std::invalid_argument(where + ": unknown key '" + it.key() + "'");
    }
}

TrainConfig parse_train(const json& section) {
    TrainConfig cfg;
    if (section.is_null()) return cfg;
    if (!section.is_object()) throw std::invalid_argument("train section must be an object");
    reject_unknown(section,
                   {"gamma", "buffer_capacity", "batch_size", "target_update_period",
                    "epsilon", "train_frequency", "qdagger_temperature", "teacher_steps",
                    "offline_steps", "online_steps", "eval_seeds", "teacher_eval_period",
                    "offline_eval_period", "online_eval_period", "learning_rate",
                    "tabular_learning_rate", "tabular_updates", "learning_starts",
                    "teacher_exploration_final", "teacher_exploration_fraction",
                    "hidden_layers", "hidden_width", "naive_summed_loss"},
                   "train section");
    cfg.gamma = section.value("gamma", cfg.gamma);
    cfg.buffer_capacity = section.value("buffer_capacity", cfg.buffer_capacity);
    cfg.batch_size = section.value("batch_size", cfg.batch_size);
    cfg.target_update_period = section.value("target_update_period", cfg.target_update_period);
    cfg.epsilon = section.value("epsilon", cfg.epsilon);
    cfg.train_frequency = section.value("train_frequency", cfg.train_frequency);
    cfg.qdagger_temperature = section.value("qdagger_temperature", cfg.qdagger_temperature);
    cfg.teacher_steps = section.value("teacher_steps", cfg.teacher_steps);
    cfg.offline_steps = section.value("offline_steps", cfg.offline_steps);
    cfg.online_steps = section.value("online_steps", cfg.online_steps);
    if (section.contains("eval_seeds"))
        cfg.eval_seeds = section.at("eval_seeds").get<std::vector<std::uint64_t>>();
    cfg.teacher_eval_period = section.value("teacher_eval_period", cfg.teacher_eval_period);
    cfg.offline_eval_period = section.value("offline_eval_period", cfg.offline_eval_period);
    cfg.online_eval_period = section.value("online_eval_period", cfg.online_eval_period);
    cfg.learning_rate = section.value("learning_rate", cfg.learning_rate);
    cfg.tabular_learning_rate = section.value("tabular_learning_rate", cfg.tabular_learning_rate);
    cfg.tabular_updates = section.value("tabular_updates", cfg.tabular_updates);
    cfg.learning_starts = section.value("learning_starts", cfg.learning_starts);
    cfg.teacher_exploration_final =
        section.value("teacher_exploration_final", cfg.teacher_exploration_final);
    cfg.teacher_exploration_fraction =
        section.value("teacher_exploration_fraction", cfg.teacher_exploration_fraction);
    cfg.hidden_layers = section.value("hidden_layers", cfg.hidden_layers);
    cfg.hidden_width = section.value("hidden_width", cfg.hidden_width);
    cfg.naive_summed_loss = section.value("naive_summed_loss", cfg.naive_summed_loss);
    return cfg;
}

ExplainSection parse_explain(const json& section) {
    ExplainSection cfg;
    if (section.is_null()) return cfg;
    if (!section.is_object()) throw std::invalid_argument("explain section must be an object");
    reject_unknown(section,
                   {"subkind", "element", "element_b", "action", "action_b", "state",
                    "episode", "format"},
                   "explain section");
    cfg.subkind = section.value("subkind", cfg.subkind);
    static const std::set<std::string> kinds = {"timeline", "confidence", "saliency", "contrast"};
    if (!kinds.count(cfg.subkind))
        throw std::invalid_argument("explain.subkind must be one of timeline, confidence, "
                                    "saliency, contrast");
    cfg.element = section.value("element", cfg.element);
    if (section.contains("element_b")) cfg.element_b = section.at("element_b").get<int>();
    if (section.contains("action")) cfg.action = section.at("action").get<int>();
    cfg.action_b = section.value("action_b", cfg.action_b);
    if (section.contains("state")) {
        const auto& state = section.at("state");
        cfg.state = state.is_number_integer() ? std::to_string(state.get<int>())
                                              : state.get<std::string>();
    }
    cfg.episode = section.value("episode", cfg.episode);
    cfg.format = section.value("format", cfg.format);
    return cfg;
}

VerifySection parse_verify(const json& section) {
    VerifySection cfg;
    if (section.is_null()) return cfg;
    if (!section.is_object()) throw std::invalid_argument("verify section must be an object");
    reject_unknown(section, {"elementwise_tolerance", "scalar_tolerance"}, "verify section");
    cfg.elementwise_tolerance = section.value("elementwise_tolerance", cfg.elementwise_tolerance);
    cfg.scalar_tolerance = section.value("scalar_tolerance", cfg.scalar_tolerance);
    return cfg;
}

}  // namespace

MdpSpec RunConfig::make_env() const { return env_from_config(env_section); }

nlohmann::json RunConfig::to_json() const {
    json trd_section{{"n", train.n}, {"w", train.w}};
    json train_section{
        {"gamma", train.gamma},
        {"buffer_capacity", train.buffer_capacity},
        {"batch_size", train.batch_size},
        {"target_update_period", train.target_update_period},
        {"epsilon", train.epsilon},
        {"train_frequency", train.train_frequency},
        {"qdagger_temperature", train.qdagger_temperature},
        {"teacher_steps", train.teacher_steps},
        {"offline_steps", train.offline_steps},
        {"online_steps", train.online_steps},
        {"eval_seeds", train.eval_seeds},
        {"teacher_eval_period", train.teacher_eval_period},
        {"offline_eval_period", train.offline_eval_period},
        {"online_eval_period", train.online_eval_period},
        {"learning_rate", train.learning_rate},
        {"tabular_learning_rate", train.tabular_learning_rate},
        {"tabular_updates", train.tabular_updates},
        {"learning_starts", train.learning_starts},
        {"teacher_exploration_final", train.teacher_exploration_final},
        {"teacher_exploration_fraction", train.teacher_exploration_fraction},
        {"hidden_layers", train.hidden_layers},
        {"hidden_width", train.hidden_width},
        {"naive_summed_loss", train.naive_summed_loss},
    };
    json explain_section{
        {"subkind", explain.subkind}, {"element", explain.element},
        {"action_b", explain.action_b}, {"state", explain.state},
        {"episode", explain.episode},  {"format", explain.format},
    };
    if (explain.element_b) explain_section["element_b"] = *explain.element_b;
    if (explain.action) explain_section["action"] = *explain.action;
    return json{{"seed", seed},
                {"out_dir", out_dir.string()},
                {"env", env_section},
                {"trd", trd_section},
                {"train", train_section},
                {"explain", explain_section},
                {"verify", json{{"elementwise_tolerance", verify.elementwise_tolerance},
                                {"scalar_tolerance", verify.scalar_tolerance}}}};
}

RunConfig parse_run_config(const nlohmann::json& j) {
    if (!j.is_object()) throw std::invalid_argument("config root must be an object");
    reject_unknown(j, {"seed", "out_dir", "env", "trd", "train", "explain", "verify"}, "config");
    if (!j.contains("env")) throw std::invalid_argument("config: env section is required");

    RunConfig cfg;
    cfg.seed = j.value("seed", std::uint64_t{0});
    cfg.out_dir = j.value("out_dir", std::string("out"));
    cfg.env_section = j.at("env");
    cfg.train = parse_train(j.contains("train") ? j.at("train") : json());
    if (j.contains("trd")) {
        const json& trd_section = j.at("trd");
        reject_unknown(trd_section, {"n", "w"}, "trd section");
        cfg.train.n = trd_section.value("n", cfg.train.n);
        cfg.train.w = trd_section.value("w", cfg.train.w);
    }
    cfg.explain = parse_explain(j.contains("explain") ? j.at("explain") : json());
    cfg.verify = parse_verify(j.contains("verify") ? j.at("verify") : json());

    cfg.train.validate();
    env_from_config(cfg.env_section);  // fail fast on a bad env section
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read config: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

void write_manifest_atomic(const RunManifest& manifest, const std::filesystem::path& path) {
    json evals = json::array();
    for (const EvalRow& row : manifest.evals) {
        evals.push_back(json{{"step", row.step},
                             {"phase", row.phase},
                             {"mean_return", row.mean_return},
                             {"normalized_return", row.normalized_return},
                             {"q_mse", row.q_mse},
                             {"lambda", row.lambda},
                             {"loss", row.loss}});
    }
    json j{{"tool_version", kToolVersion},
           {"command", manifest.command},
           {"resolved_config", manifest.resolved_config},
           {"started_at", manifest.started_at},
           {"finished_at", manifest.finished_at},
           {"evaluations", evals},
           {"artifacts", manifest.artifacts},
           {"weights_file", manifest.weights_file},
           {"weights_digest_fnv1a64", manifest.weights_digest}};
    if (!manifest.extra.is_null())
        for (auto it = manifest.extra.begin(); it != manifest.extra.end(); ++it)
            j[it.key()] = it.value();

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("cannot write manifest: " + tmp.string());
        out << j.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
}

}  // namespace trd
