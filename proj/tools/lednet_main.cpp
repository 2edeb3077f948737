// lednet: lung localization + chest x-ray classification pipeline.
#include <CLI11.hpp>

#include <iostream>
#include <optional>

#include "lednet/config.hpp"
#include "lednet/error.hpp"
#include "lednet/pipeline.hpp"
#include "lednet/tensor.hpp"

namespace {

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    bool synthetic = false;
};

void add_common(CLI::App* cmd, CommonFlags& flags)
{
    cmd->add_option("--config", flags.config_path, "key=value experiment config file");
    cmd->add_option("--seed", flags.seed, "override the config seed");
    cmd->add_flag("--synthetic", flags.synthetic, "generate synthetic data where real data is absent");
}

lednet::ExperimentConfig resolve(const CommonFlags& flags)
{
    auto config = flags.config_path.empty() ? lednet::ExperimentConfig{}
                                            : lednet::ExperimentConfig::load(flags.config_path);
    if (flags.seed) config.seed = *flags.seed;
    config.validate();
    return config;
}

lednet::data::Partition parse_partition(const std::string& name)
{
    if (name == "train") return lednet::data::Partition::Train;
    if (name == "val") return lednet::data::Partition::Val;
    if (name == "test") return lednet::data::Partition::Test;
    throw lednet::ConfigError("unknown partition '" + name + "'");
}

}  // namespace

int main(int argc, char** argv)
{
    namespace pl = lednet::pipeline;
    CLI::App app{"Lung localization and multilabel chest x-ray classification"};
    app.require_subcommand(1);
    CommonFlags flags;

    auto* localize = app.add_subcommand("localize-train", "train the lung localizer");
    add_common(localize, flags);

    auto* overlay = app.add_subcommand("overlay", "write lung-overlay images for frontal records");
    add_common(overlay, flags);

    std::string arm_text = "original";
    auto* classify = app.add_subcommand("classify-train", "train one comparison arm");
    add_common(classify, flags);
    classify->add_option("--arm", arm_text, "original or overlay")
        ->check(CLI::IsMember({"original", "overlay"}));

    std::string partition_text = "test";
    auto* evaluate = app.add_subcommand("evaluate", "evaluate a trained arm on a split partition");
    add_common(evaluate, flags);
    evaluate->add_option("--arm", arm_text, "original or overlay")
        ->check(CLI::IsMember({"original", "overlay"}));
    evaluate->add_option("--partition", partition_text, "train, val or test")
        ->check(CLI::IsMember({"train", "val", "test"}));

    std::vector<std::string> report_arms;
    bool train_arms = false;
    auto* report = app.add_subcommand("compare-report", "join arm histories into curves and a table");
    add_common(report, flags);
    report->add_option("--arms", report_arms, "arms to include (default: both)")
        ->check(CLI::IsMember({"original", "overlay"}));
    report->add_flag("--train", train_arms, "train both arms before reporting");

    CLI11_PARSE(app, argc, argv);

    try {
        lednet::configure_determinism();
        const auto config = resolve(flags);
        auto& log = std::cout;
        if (localize->parsed()) {
            pl::cmd_localize_train(config, flags.synthetic, log);
        } else if (overlay->parsed()) {
            pl::cmd_overlay(config, flags.synthetic, log);
        } else if (classify->parsed()) {
            pl::cmd_classify_train(config, pl::parse_arm(arm_text), flags.synthetic, log);
        } else if (evaluate->parsed()) {
            pl::cmd_evaluate(config, pl::parse_arm(arm_text), parse_partition(partition_text), log);
        } else if (report->parsed()) {
            if (train_arms) {
                pl::cmd_classify_train(config, pl::Arm::Original, flags.synthetic, log);
                pl::cmd_classify_train(config, pl::Arm::Overlay, flags.synthetic, log);
            }
            std::vector<pl::Arm> arms;
            if (report_arms.empty()) report_arms = {"original", "overlay"};
            for (const auto& name : report_arms) arms.push_back(pl::parse_arm(name));
            const auto files = pl::cmd_report(config.paths.report_dir, arms);
            log << "wrote " << files.table.string() << ", " << files.accuracy_plot.string() << ", "
                << files.loss_plot.string() << '\n';
        }
    } catch (const lednet::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
