#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "trd/config.hpp"

namespace trd::commands {

// Flags shared by all subcommands; overrides win over the config file.
struct CommonOptions {
    std::filesystem::path config_path;
    std::optional<std::string> out_override;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> format_override;
};

RunConfig load_config(const CommonOptions& options);

int cmd_train_teacher(const CommonOptions& options);
int cmd_retrain_trd(const CommonOptions& options,
                    const std::filesystem::path& teacher_weights,
                    const std::filesystem::path& teacher_buffer);
int cmd_verify(const CommonOptions& options, const std::filesystem::path& weights);
int cmd_explain(const CommonOptions& options, const std::filesystem::path& weights,
                const std::optional<std::string>& subkind_override,
                const std::optional<std::string>& state_override);

}  // namespace trd::commands
