#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "config.hpp"

namespace {

using namespace ssem::harness;

struct Invocation {
    std::string config_path;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::string which = "all";
};

void add_common(CLI::App* cmd, Invocation& inv) {
    cmd->add_option("--config", inv.config_path, "Key-value config file, or a summary/report JSON")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--out", inv.out_dir, "Output directory (overrides output.directory)");
    cmd->add_option("--seed", inv.seed, "Sampling seed (overrides data.seed)");
    cmd->add_option("--set", inv.overrides, "Override a config key: key=value")->allow_extra_args(false);
}

RunConfig load(const Invocation& inv) {
    auto values = load_key_values(inv.config_path);
    for (const auto& assignment : inv.overrides) apply_override(values, assignment);
    if (inv.seed) values["data.seed"] = std::to_string(*inv.seed);
    if (inv.out_dir) values["output.directory"] = *inv.out_dir;
    return resolve(values);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Semi-supervised EM experiments: sampling, finite-sample and population EM, bound checks"};
    app.require_subcommand(1);

    Invocation inv;
    auto* simulate = app.add_subcommand("simulate", "Sample a dataset and run finite-sample EM");
    auto* population = app.add_subcommand("population", "Run population EM by quadrature");
    auto* verify = app.add_subcommand("verify", "Check the contraction and rate bounds");
    auto* sample = app.add_subcommand("sample", "Write a sampled dataset");
    for (auto* cmd : {simulate, population, verify, sample}) add_common(cmd, inv);
    verify->add_option("which", inv.which, "Target to verify")
        ->check(CLI::IsMember(verify_targets()));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        const auto cfg = load(inv);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (population->parsed()) return cmd_population(cfg);
        if (sample->parsed()) return cmd_sample(cfg);
        return cmd_verify(cfg, inv.which);
    } catch (const std::exception& e) {
        std::cerr << error_json(e).dump() << '\n';
        return exit_code_for(e);
    }
}
