#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "trd/estimators.hpp"

namespace trd::explain {

// Per-group expected rewards with the discount factored out: "what reward,
// when". kind is expected_reward, or confidence when rescaled to reward
// probabilities on a binary-reward environment.
struct Timeline {
    std::vector<double> values;  // length n (tail dropped)
    int group_width = 1;
    std::string kind = "expected_reward";
    int state = -1;  // -1 when the observation is not a one-hot encoding
    int action = 0;
    double clipped_mass = 0.0;  // total mass removed by [0,1] clipping

    bool operator==(const Timeline&) const = default;
};

// Per-input-feature importance for one reward-vector element, max-abs
// normalized to [-1, 1].
struct SaliencyMap {
    int element = 0;
    int action = 0;
    std::vector<double> importance;

    bool operator==(const SaliencyMap&) const = default;
};

// Elementwise comparison of two actions' reward vectors at one state.
struct ContrastResult {
    int action_a = 0;
    int action_b = 0;
    std::vector<double> rewards_a;  // length n+1, tail included
    std::vector<double> rewards_b;
    std::vector<double> diff;  // a minus b
    double scalar_diff = 0.0;
    std::vector<double> timeline_a;  // discount factored out, tail dropped
    std::vector<double> timeline_b;

    bool operator==(const ContrastResult&) const = default;
};

// predict_vector with the tail dropped and group i divided by gamma^(i*w).
Timeline reward_timeline(const TrdEstimator& est, const Observation& obs,
                         std::optional<int> action = std::nullopt);

// Timeline rescaled by the environment's binary reward constant and read as
// per-group reward probability. Refused unless the reward table is binary
// and w == 1; values are clipped to [0, 1] with the clipped mass recorded.
Timeline confidence_timeline(const TrdEstimator& est, const MdpSpec& spec,
                             const Observation& obs,
                             std::optional<int> action = std::nullopt);

// Gradient of output (action, element) with respect to the input features,
// weighted per feature by a first-hidden-layer activation-gradient term
// projected through the first-layer weight magnitudes.
SaliencyMap element_saliency(const NeuralTrd& est, const Observation& obs, int element,
                             int action);

// Elementwise a - b, max-abs renormalized.
SaliencyMap saliency_diff(const SaliencyMap& a, const SaliencyMap& b);

ContrastResult contrast_actions(const TrdEstimator& est, const Observation& obs,
                                int action_a, int action_b);

enum class ArtifactFormat { kCsv, kJson, kSvg };
ArtifactFormat parse_format(const std::string& name);

// CSV schemas:
//   timeline: timestep,group_width,value,kind
//   saliency: feature_index,importance
//   contrast: element,reward_a,reward_b,diff
// JSON mirrors the struct fields; SVG is a static bar chart.
void export_artifact(const Timeline& timeline, const std::filesystem::path& path,
                     ArtifactFormat format);
void export_artifact(const SaliencyMap& map, const std::filesystem::path& path,
                     ArtifactFormat format);
void export_artifact(const ContrastResult& contrast, const std::filesystem::path& path,
                     ArtifactFormat format);

Timeline timeline_from_json_file(const std::filesystem::path& path);
SaliencyMap saliency_from_json_file(const std::filesystem::path& path);
ContrastResult contrast_from_json_file(const std::filesystem::path& path);

}  // namespace trd::explain
