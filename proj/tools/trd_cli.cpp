#include <CLI11.hpp>
#include <iostream>

#include "trd/commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Temporal reward decomposition toolkit: train, retrain, verify and explain "
                 "reward-vector estimators on finite MDPs"};
    app.require_subcommand(1);

    trd::commands::CommonOptions common;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string format;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", common.config_path, "run config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--out", out_dir, "output directory (overrides config)");
        cmd->add_option("--seed", seed, "root seed (overrides config)");
    };

    CLI::App* train = app.add_subcommand("train-teacher", "train a scalar Q teacher");
    add_common(train);

    CLI::App* retrain =
        app.add_subcommand("retrain-trd", "retrain a teacher into a reward-vector estimator");
    add_common(retrain);
    std::string teacher_weights, teacher_buffer;
    retrain->add_option("--teacher-weights", teacher_weights, "teacher weight file")
        ->required()
        ->check(CLI::ExistingFile);
    retrain->add_option("--teacher-buffer", teacher_buffer, "teacher trajectory log")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* verify =
        app.add_subcommand("verify", "compare an estimator against the exact oracle");
    add_common(verify);
    std::string verify_weights;
    verify->add_option("--weights", verify_weights, "estimator weight file")
        ->required()
        ->check(CLI::ExistingFile);

    CLI::App* explain = app.add_subcommand("explain", "emit explanation artifacts");
    add_common(explain);
    std::string explain_weights, subkind, state;
    explain->add_option("--weights", explain_weights, "estimator weight file")
        ->required()
        ->check(CLI::ExistingFile);
    explain->add_option("--subkind", subkind,
                        "timeline | confidence | saliency | contrast (overrides config)");
    explain->add_option("--state", state, "state selector: 'initial' or index");
    explain->add_option("--format", format, "csv | json | svg (overrides config)");

    CLI11_PARSE(app, argc, argv);

    auto opt = [](const std::string& s) {
        return s.empty() ? std::nullopt : std::optional<std::string>(s);
    };
    common.out_override = opt(out_dir);
    common.format_override = opt(format);
    for (const CLI::App* cmd : {train, retrain, verify, explain}) {
        if (cmd->parsed() && cmd->count("--seed") > 0) common.seed_override = seed;
    }

    try {
        if (train->parsed()) return trd::commands::cmd_train_teacher(common);
        if (retrain->parsed())
            return trd::commands::cmd_retrain_trd(common, teacher_weights, teacher_buffer);
        if (verify->parsed()) return trd::commands::cmd_verify(common, verify_weights);
        if (explain->parsed())
            return trd::commands::cmd_explain(common, explain_weights, opt(subkind), opt(state));
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
