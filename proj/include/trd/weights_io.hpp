#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "trd/estimators.hpp"

namespace trd {

enum class WeightKind : std::uint8_t {
    kNeuralTrd = 0,
    kTabularTrd = 1,
    kScalarQ = 2,
};

// Versioned binary weight file: header (format version, kind, shape, n, w,
// gamma, seed) followed by flat little-endian float64 parameters in layer
// order, plus a human-readable JSON sidecar at <path>.meta.json.
void save_weights(const NeuralTrd& est, const std::filesystem::path& path);
void save_weights(const TabularTrd& est, const std::filesystem::path& path);
void save_weights(const ScalarQNet& est, const std::filesystem::path& path);

struct LoadedWeights {
    WeightKind kind = WeightKind::kNeuralTrd;
    std::optional<NeuralTrd> neural;
    std::optional<TabularTrd> tabular;
    std::optional<ScalarQNet> scalar_q;
};

// Throws std::runtime_error on missing files, bad magic, truncation, or
// version mismatch.
LoadedWeights load_weights(const std::filesystem::path& path);

NeuralTrd load_neural_trd(const std::filesystem::path& path);
TabularTrd load_tabular_trd(const std::filesystem::path& path);
ScalarQNet load_scalar_q(const std::filesystem::path& path);

// FNV-1a over the raw file bytes, hex-encoded; the manifest integrity digest.
std::string file_digest_hex(const std::filesystem::path& path);

}  // namespace trd
