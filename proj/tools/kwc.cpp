#include "kwc/commands.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Gamma-convergence experiments for the KWC energy"};
    app.set_version_flag("--version", std::string(kwc::kToolVersion));
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    for (const auto& name : kwc::command_names()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "experiment configuration (INI)")->required();
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--seed", seed, "random seed");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kwc::kExitConfig;
    }

    const auto* sub = app.get_subcommands().front();
    const bool seeded = sub->count("--seed") > 0;
    try {
        auto ctx = kwc::make_context(kwc::Config::load(config_path), out_dir, seeded ? &seed : nullptr, &std::cout);
        return kwc::run_command(sub->get_name(), ctx);
    } catch (const kwc::ConfigError& e) {
        std::cerr << "kwc: " << e.what() << '\n';
        return kwc::kExitConfig;
    }
}
