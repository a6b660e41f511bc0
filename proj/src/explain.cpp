#include "trd/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

namespace trd::explain {

namespace {

using nlohmann::json;

int resolve_action(const TrdEstimator& est, const Observation& obs,
                   std::optional<int> action) {
    if (!action) return greedy_action(est, obs);
    if (*action < 0 || *action >= est.num_actions())
        throw std::invalid_argument("explain: action index out of range");
    return *action;
}

int try_one_hot_state(const Observation& obs) {
    try {
        return one_hot_state(obs);
    } catch (const std::invalid_argument&) {
        return -1;
    }
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_artifact(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write artifact: " + path.string());
    return out;
}

json load_json(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read artifact: " + path.string());
    return json::parse(in);
}

// Minimal bar chart; exactly one rect per data point.
void write_svg_bars(std::ostream& out, const std::vector<double>& values,
                    const std::string& title, const std::string& x_label) {
    const int bar = 14;
    const int gap = 4;
    const int plot_h = 160;
    const int margin = 42;
    const int width = margin * 2 + static_cast<int>(values.size()) * (bar + gap);
    const int height = plot_h + margin * 2;

    double max_abs = 0.0;
    for (double v : values) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs == 0.0) max_abs = 1.0;
    const double scale = (plot_h / 2.0) / max_abs;
    const double baseline = margin + plot_h / 2.0;

    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    out << "  <title>" << title << "</title>\n";
    out << "  <line x1=\"" << margin << "\" y1=\"" << baseline << "\" x2=\""
        << width - margin << "\" y2=\"" << baseline << "\" stroke=\"#444\"/>\n";
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double v = values[i];
        const double h = std::abs(v) * scale;
        const double x = margin + static_cast<double>(i) * (bar + gap);
        const double y = v >= 0.0 ? baseline - h : baseline;
        out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << bar
            << "\" height=\"" << h << "\" fill=\"" << (v >= 0.0 ? "#4682b4" : "#cd5c5c")
            << "\"><desc>" << x_label << ' ' << i << ": " << format_double(v)
            << "</desc></rect>\n";
    }
    out << "</svg>\n";
}

}  // namespace

Timeline reward_timeline(const TrdEstimator& est, const Observation& obs,
                         std::optional<int> action) {
    Timeline timeline;
    timeline.action = resolve_action(est, obs, action);
    timeline.state = try_one_hot_state(obs);
    timeline.group_width = est.group_w();

    const RewardVector vec = est.predict_vector(obs)[timeline.action];
    timeline.values.resize(vec.n);
    const double gamma = est.gamma();
    for (int i = 0; i < vec.n; ++i) {
        const double lead = std::pow(gamma, static_cast<double>(i) * est.group_w());
        timeline.values[i] = lead > 0.0 ? vec[i] / lead : 0.0;
    }
    return timeline;
}

Timeline confidence_timeline(const TrdEstimator& est, const MdpSpec& spec,
                             const Observation& obs, std::optional<int> action) {
    const auto constant = spec.binary_reward_constant();
    if (!constant)
        throw std::invalid_argument(
            "confidence_timeline: rewards are not binary (zero or one constant)");
    if (est.group_w() != 1)
        throw std::invalid_argument("confidence_timeline: requires group width w=1");

    Timeline timeline = reward_timeline(est, obs, action);
    timeline.kind = "confidence";
    for (double& v : timeline.values) {
        v /= *constant;
        const double clipped = std::clamp(v, 0.0, 1.0);
        timeline.clipped_mass += std::abs(v - clipped);
        v = clipped;
    }
    return timeline;
}

SaliencyMap element_saliency(const NeuralTrd& est, const Observation& obs, int element,
                             int action) {
    if (element < 0 || element > est.horizon_n())
        throw std::invalid_argument("element_saliency: element index out of range");
    if (action < 0 || action >= est.num_actions())
        throw std::invalid_argument("element_saliency: action index out of range");

    const Mlp& net = est.net();
    const MlpForward fwd = net.forward(obs.features);
    std::vector<double> upstream(net.output_dim(), 0.0);
    upstream[est.flat_index(action, element)] = 1.0;
    const MlpBackward bwd = net.backward(fwd, upstream);

    SaliencyMap map;
    map.element = element;
    map.action = action;
    map.importance.assign(obs.features.size(), 0.0);

    if (net.num_layers() >= 2) {
        // Per-unit activation-gradient weighting on the first hidden layer,
        // pushed back to the inputs through the first-layer weight magnitudes.
        const auto& h = fwd.post[0];
        const auto& gh = bwd.post_deltas[0];
        const Matrix& w0 = net.weights()[0];
        std::vector<double> cam(h.size());
        for (std::size_t j = 0; j < h.size(); ++j) cam[j] = std::abs(h[j] * gh[j]);
        for (std::size_t d = 0; d < map.importance.size(); ++d) {
            double proj = 0.0;
            for (std::size_t j = 0; j < cam.size(); ++j)
                proj += std::abs(w0.at(static_cast<int>(j), static_cast<int>(d))) * cam[j];
            map.importance[d] = bwd.grads.input_grad[d] * proj;
        }
    } else {
        map.importance = bwd.grads.input_grad;
    }

    double max_abs = 0.0;
    for (double v : map.importance) max_abs = std::max(max_abs, std::abs(v));
    if (max_abs > 0.0)
        for (double& v : map.importance) v /= max_abs;
    return map;
}

SaliencyMap saliency_diff(const SaliencyMap& a, const SaliencyMap& b) {
    if (a.importance.size() != b.importance.size())
        throw std::invalid_argument("saliency_diff: dimension mismatch");
    SaliencyMap diff;
    diff.element = a.element;
    diff.action = a.action;
    diff.importance.resize(a.importance.size());
    double max_abs = 0.0;
    for (std::size_t i = 0; i < a.importance.size(); ++i) {
        diff.importance[i] = a.importance[i] - b.importance[i];
        max_abs = std::max(max_abs, std::abs(diff.importance[i]));
    }
    if (max_abs > 0.0)
        for (double& v : diff.importance) v /= max_abs;
    return diff;
}

ContrastResult contrast_actions(const TrdEstimator& est, const Observation& obs,
                                int action_a, int action_b) {
    if (action_a < 0 || action_a >= est.num_actions() || action_b < 0 ||
        action_b >= est.num_actions())
        throw std::invalid_argument("contrast_actions: action index out of range");

    const auto vectors = est.predict_vector(obs);
    ContrastResult contrast;
    contrast.action_a = action_a;
    contrast.action_b = action_b;
    contrast.rewards_a = vectors[action_a].elements;
    contrast.rewards_b = vectors[action_b].elements;
    contrast.diff.resize(contrast.rewards_a.size());
    for (std::size_t i = 0; i < contrast.diff.size(); ++i)
        contrast.diff[i] = contrast.rewards_a[i] - contrast.rewards_b[i];
    contrast.scalar_diff = vectors[action_a].sum() - vectors[action_b].sum();

    const double gamma = est.gamma();
    const int n = est.horizon_n();
    const int w = est.group_w();
    contrast.timeline_a.resize(n);
    contrast.timeline_b.resize(n);
    for (int i = 0; i < n; ++i) {
        const double lead = std::pow(gamma, static_cast<double>(i) * w);
        contrast.timeline_a[i] = lead > 0.0 ? contrast.rewards_a[i] / lead : 0.0;
        contrast.timeline_b[i] = lead > 0.0 ? contrast.rewards_b[i] / lead : 0.0;
    }
    return contrast;
}

ArtifactFormat parse_format(const std::string& name) {
    if (name == "csv") return ArtifactFormat::kCsv;
    if (name == "json") return ArtifactFormat::kJson;
    if (name == "svg") return ArtifactFormat::kSvg;
    throw std::invalid_argument("unknown artifact format: " + name);
}

void export_artifact(const Timeline& timeline, const std::filesystem::path& path,
                     ArtifactFormat format) {
    auto out = open_artifact(path);
    switch (format) {
        case ArtifactFormat::kCsv: {
            out << "timestep,group_width,value,kind\n";
            for (std::size_t i = 0; i < timeline.values.size(); ++i)
                out << i * timeline.group_width << ',' << timeline.group_width << ','
                    << format_double(timeline.values[i]) << ',' << timeline.kind << '\n';
            break;
        }
        case ArtifactFormat::kJson: {
            json j{{"type", "timeline"},
                   {"values", timeline.values},
                   {"group_width", timeline.group_width},
                   {"kind", timeline.kind},
                   {"state", timeline.state},
                   {"action", timeline.action},
                   {"clipped_mass", timeline.clipped_mass}};
            out << j.dump(2) << '\n';
            break;
        }
        case ArtifactFormat::kSvg:
            write_svg_bars(out, timeline.values, timeline.kind + " timeline", "t+");
            break;
    }
}

void export_artifact(const SaliencyMap& map, const std::filesystem::path& path,
                     ArtifactFormat format) {
    auto out = open_artifact(path);
    switch (format) {
        case ArtifactFormat::kCsv: {
            out << "feature_index,importance\n";
            for (std::size_t i = 0; i < map.importance.size(); ++i)
                out << i << ',' << format_double(map.importance[i]) << '\n';
            break;
        }
        case ArtifactFormat::kJson: {
            json j{{"type", "saliency"},
                   {"element", map.element},
                   {"action", map.action},
                   {"importance", map.importance}};
            out << j.dump(2) << '\n';
            break;
        }
        case ArtifactFormat::kSvg:
            write_svg_bars(out, map.importance, "feature importance", "feature");
            break;
    }
}

void export_artifact(const ContrastResult& contrast, const std::filesystem::path& path,
                     ArtifactFormat format) {
    auto out = open_artifact(path);
    switch (format) {
        case ArtifactFormat::kCsv: {
            out << "element,reward_a,reward_b,diff\n";
            for (std::size_t i = 0; i < contrast.diff.size(); ++i)
                out << i << ',' << format_double(contrast.rewards_a[i]) << ','
                    << format_double(contrast.rewards_b[i]) << ','
                    << format_double(contrast.diff[i]) << '\n';
            break;
        }
        case ArtifactFormat::kJson: {
            json j{{"type", "contrast"},
                   {"action_a", contrast.action_a},
                   {"action_b", contrast.action_b},
                   {"rewards_a", contrast.rewards_a},
                   {"rewards_b", contrast.rewards_b},
                   {"diff", contrast.diff},
                   {"scalar_diff", contrast.scalar_diff},
                   {"timeline_a", contrast.timeline_a},
                   {"timeline_b", contrast.timeline_b}};
            out << j.dump(2) << '\n';
            break;
        }
        case ArtifactFormat::kSvg:
            write_svg_bars(out, contrast.diff, "action contrast (a minus b)", "element");
            break;
    }
}

Timeline timeline_from_json_file(const std::filesystem::path& path) {
    const json j = load_json(path);
    Timeline t;
    t.values = j.at("values").get<std::vector<double>>();
    t.group_width = j.at("group_width").get<int>();
    t.kind = j.at("kind").get<std::string>();
    t.state = j.at("state").get<int>();
    t.action = j.at("action").get<int>();
    t.clipped_mass = j.at("clipped_mass").get<double>();
    return t;
}

SaliencyMap saliency_from_json_file(const std::filesystem::path& path) {
    const json j = load_json(path);
    SaliencyMap m;
    m.element = j.at("element").get<int>();
    m.action = j.at("action").get<int>();
    m.importance = j.at("importance").get<std::vector<double>>();
    return m;
}

ContrastResult contrast_from_json_file(const std::filesystem::path& path) {
    const json j = load_json(path);
    ContrastResult c;
    c.action_a = j.at("action_a").get<int>();
    c.action_b = j.at("action_b").get<int>();
    c.rewards_a = j.at("rewards_a").get<std::vector<double>>();
    c.rewards_b = j.at("rewards_b").get<std::vector<double>>();
    c.diff = j.at("diff").get<std::vector<double>>();
    c.scalar_diff = j.at("scalar_diff").get<double>();
    c.timeline_a = j.at("timeline_a").get<std::vector<double>>();
    c.timeline_b = j.at("timeline_b").get<std::vector<double>>();
    return c;
}

}  // namespace trd::explain
