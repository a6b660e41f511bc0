#pragma once

#include <cstdint>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>

#include "trd/learner.hpp"
#include "trd/mdp.hpp"

namespace trd {

inline constexpr const char* kToolVersion = "0.1.0";

struct ExplainSection {
    std::string subkind = "timeline";  // timeline | confidence | saliency | contrast
    int element = 0;
    std::optional<int> element_b;  // second saliency element, emits a diff
    std::optional<int> action;     // greedy when absent
    int action_b = 1;              // contrast counterpart
    std::string state = "initial";
    bool episode = false;
    std::string format = "csv";
};

struct VerifySection {
    double elementwise_tolerance = 0.05;
    double scalar_tolerance = 0.1;
};

// A full run description: environment, decomposition shape, training
// hyperparameters, explanation request and the root seed. Unknown keys are
// rejected so a config snapshot in a manifest is always complete.
struct RunConfig {
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
    nlohmann::json env_section;
    TrainConfig train;
    ExplainSection explain;
    VerifySection verify;

    MdpSpec make_env() const;
    nlohmann::json to_json() const;
};

RunConfig parse_run_config(const nlohmann::json& j);
RunConfig load_run_config(const std::filesystem::path& path);

// Run record: resolved config, tool version, timestamps, per-evaluation
// metrics, artifact list and the weight-file digest. Written atomically.
struct RunManifest {
    std::string command;
    nlohmann::json resolved_config;
    std::string started_at;
    std::string finished_at;
    std::vector<EvalRow> evals;
    std::vector<std::string> artifacts;
    std::string weights_file;
    std::string weights_digest;
    nlohmann::json extra;
};

std::string utc_timestamp();
void write_manifest_atomic(const RunManifest& manifest, const std::filesystem::path& path);

}  // namespace trd
