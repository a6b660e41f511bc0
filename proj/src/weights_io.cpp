#include "trd/weights_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "trd/rng.hpp"

namespace trd {

namespace {

constexpr char kMagic[4] = {'T', 'R', 'D', 'W'};
constexpr std::uint32_t kFormatVersion = 1;

void write_u8(std::ostream& out, std::uint8_t v) { out.put(static_cast<char>(v)); }

void write_u32(std::ostream& out, std::uint32_t v) {
    char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
    char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
    out.write(b, 8);
}

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    write_u64(out, bits);
}

std::uint8_t read_u8(std::istream& in) {
    char c;
    if (!in.get(c)) throw std::runtime_error("weight file truncated");
    return static_cast<std::uint8_t>(c);
}

std::uint32_t read_u32(std::istream& in) {
    char b[4];
    if (!in.read(b, 4)) throw std::runtime_error("weight file truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

std::uint64_t read_u64(std::istream& in) {
    char b[8];
    if (!in.read(b, 8)) throw std::runtime_error("weight file truncated");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[i])) << (8 * i);
    return v;
}

double read_f64(std::istream& in) {
    const std::uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
}

struct Header {
    WeightKind kind;
    std::uint32_t n = 0;
    std::uint32_t w = 0;
    double gamma = 0.0;
    std::uint64_t seed = 0;
    std::uint32_t num_actions = 0;
};

void write_header(std::ostream& out, const Header& h) {
    out.write(kMagic, 4);
    write_u32(out, kFormatVersion);
    write_u8(out, static_cast<std::uint8_t>(h.kind));
    write_u32(out, h.n);
    write_u32(out, h.w);
    write_f64(out, h.gamma);
    write_u64(out, h.seed);
    write_u32(out, h.num_actions);
}

Header read_header(std::istream& in) {
    char magic[4];
    if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("not a weight file (bad magic)");
    const std::uint32_t version = read_u32(in);
    if (version != kFormatVersion)
        throw std::runtime_error("unsupported weight file version " + std::to_string(version));
    Header h;
    h.kind = static_cast<WeightKind>(read_u8(in));
    h.n = read_u32(in);
    h.w = read_u32(in);
    h.gamma = read_f64(in);
    h.seed = read_u64(in);
    h.num_actions = read_u32(in);
    return h;
}

void write_mlp(std::ostream& out, const Mlp& net) {
    const auto& widths = net.widths();
    write_u32(out, static_cast<std::uint32_t>(widths.size()));
    for (int wdt : widths) write_u32(out, static_cast<std::uint32_t>(wdt));
    for (int l = 0; l < net.num_layers(); ++l) {
        for (double v : net.weights()[l].data) write_f64(out, v);
        for (double v : net.biases()[l]) write_f64(out, v);
    }
}

std::vector<int> read_widths(std::istream& in) {
    const std::uint32_t count = read_u32(in);
    if (count < 2 || count > 64) throw std::runtime_error("weight file: implausible layer count");
    std::vector<int> widths(count);
    for (auto& wdt : widths) wdt = static_cast<int>(read_u32(in));
    return widths;
}

void read_mlp_params(std::istream& in, Mlp& net) {
    for (int l = 0; l < net.num_layers(); ++l) {
        for (double& v : net.weights()[l].data) v = read_f64(in);
        for (double& v : net.biases()[l]) v = read_f64(in);
    }
    in.peek();
    if (!in.eof()) throw std::runtime_error("weight file: trailing bytes");
}

std::vector<int> hidden_of(const std::vector<int>& widths) {
    return std::vector<int>(widths.begin() + 1, widths.end() - 1);
}

void write_sidecar(const std::filesystem::path& path, const Header& h,
                   const nlohmann::json& shape) {
    nlohmann::json meta{
        {"format_version", kFormatVersion},
        {"kind", h.kind == WeightKind::kNeuralTrd    ? "neural_trd"
                 : h.kind == WeightKind::kTabularTrd ? "tabular_trd"
                                                     : "scalar_q"},
        {"n", h.n},
        {"w", h.w},
        {"gamma", h.gamma},
        {"seed", h.seed},
        {"num_actions", h.num_actions},
        {"shape", shape},
    };
    std::ofstream out(path.string() + ".meta.json");
    out << meta.dump(2) << '\n';
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write weight file: " + path.string());
    return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read weight file: " + path.string());
    return in;
}

}  // namespace

void save_weights(const NeuralTrd& est, const std::filesystem::path& path) {
    auto out = open_out(path);
    Header h{WeightKind::kNeuralTrd, static_cast<std::uint32_t>(est.horizon_n()),
             static_cast<std::uint32_t>(est.group_w()), est.gamma(), est.init_seed(),
             static_cast<std::uint32_t>(est.num_actions())};
    write_header(out, h);
    write_mlp(out, est.net());
    write_sidecar(path, h, nlohmann::json{{"layer_widths", est.net().widths()}});
}

void save_weights(const TabularTrd& est, const std::filesystem::path& path) {
    auto out = open_out(path);
    Header h{WeightKind::kTabularTrd, static_cast<std::uint32_t>(est.horizon_n()),
             static_cast<std::uint32_t>(est.group_w()), est.gamma(), 0,
             static_cast<std::uint32_t>(est.num_actions())};
    write_header(out, h);
    write_u32(out, static_cast<std::uint32_t>(est.num_states()));
    for (int s = 0; s < est.num_states(); ++s)
        for (int a = 0; a < est.num_actions(); ++a)
            for (double v : est.at(s, a).elements) write_f64(out, v);
    write_sidecar(path, h, nlohmann::json{{"num_states", est.num_states()}});
}

void save_weights(const ScalarQNet& est, const std::filesystem::path& path) {
    auto out = open_out(path);
    Header h{WeightKind::kScalarQ, 0, 0, est.gamma(), est.init_seed(),
             static_cast<std::uint32_t>(est.num_actions())};
    write_header(out, h);
    write_mlp(out, est.net());
    write_sidecar(path, h, nlohmann::json{{"layer_widths", est.net().widths()}});
}

LoadedWeights load_weights(const std::filesystem::path& path) {
    auto in = open_in(path);
    const Header h = read_header(in);
    LoadedWeights loaded;
    loaded.kind = h.kind;
    switch (h.kind) {
        case WeightKind::kNeuralTrd: {
            const auto widths = read_widths(in);
            NeuralTrd est(widths.front(), static_cast<int>(h.num_actions),
                          static_cast<int>(h.n), static_cast<int>(h.w), h.gamma,
                          hidden_of(widths), h.seed);
            if (est.net().widths() != widths)
                throw std::runtime_error("weight file: inconsistent layer widths");
            read_mlp_params(in, est.net());
            loaded.neural = std::move(est);
            break;
        }
        case WeightKind::kTabularTrd: {
            const int num_states = static_cast<int>(read_u32(in));
            TabularTrd est(num_states, static_cast<int>(h.num_actions),
                           static_cast<int>(h.n), static_cast<int>(h.w), h.gamma);
            for (int s = 0; s < num_states; ++s)
                for (int a = 0; a < est.num_actions(); ++a)
                    for (double& v : est.at(s, a).elements) v = read_f64(in);
            in.peek();
            if (!in.eof()) throw std::runtime_error("weight file: trailing bytes");
            loaded.tabular = std::move(est);
            break;
        }
        case WeightKind::kScalarQ: {
            const auto widths = read_widths(in);
            ScalarQNet est(widths.front(), static_cast<int>(h.num_actions), h.gamma,
                           hidden_of(widths), h.seed);
            if (est.net().widths() != widths)
                throw std::runtime_error("weight file: inconsistent layer widths");
            read_mlp_params(in, est.net());
            loaded.scalar_q = std::move(est);
            break;
        }
        default:
            throw std::runtime_error("weight file: unknown estimator kind");
    }
    return loaded;
}

NeuralTrd load_neural_trd(const std::filesystem::path& path) {
    auto loaded = load_weights(path);
    if (!loaded.neural) throw std::runtime_error("expected a neural reward-vector weight file");
    return std::move(*loaded.neural);
}

TabularTrd load_tabular_trd(const std::filesystem::path& path) {
    auto loaded = load_weights(path);
    if (!loaded.tabular) throw std::runtime_error("expected a tabular reward-vector weight file");
    return std::move(*loaded.tabular);
}

ScalarQNet load_scalar_q(const std::filesystem::path& path) {
    auto loaded = load_weights(path);
    if (!loaded.scalar_q) throw std::runtime_error("expected a scalar Q weight file");
    return std::move(*loaded.scalar_q);
}

std::string file_digest_hex(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot digest file: " + path.string());
    std::uint64_t h = rng::kFnvOffset;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h = rng::fnv1a64_bytes(reinterpret_cast<const unsigned char*>(buf),
                               static_cast<std::size_t>(in.gcount()), h);
        if (in.eof()) break;
    }
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return std::string(hex);
}

}  // namespace trd
