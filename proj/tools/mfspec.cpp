#include <iostream>

#include <CLI11.hpp>

#include "multifractal/cli.hpp"
#include "multifractal/error.hpp"

using namespace multifractal;

int main(int argc, char** argv) {
    CLI::App app{"Multifractal spectra of weak Gibbs measures on Markov interval maps"};
    app.require_subcommand(1);

    std::string path, out;
    std::vector<std::string> overrides;

    auto* run = app.add_subcommand("run", "run the command named in a config");
    run->add_option("config", path, "JSON config")->required()->check(CLI::ExistingFile);
    run->add_option("--out", out, "output directory (overrides output.dir)");
    run->add_option("--set", overrides, "override a config value, e.g. command.level=10");

    auto* check = app.add_subcommand("check", "validate a config and print it in canonical form");
    check->add_option("config", path, "JSON config")->required()->check(CLI::ExistingFile);
    check->add_option("--set", overrides, "override a config value");

    CLI11_PARSE(app, argc, argv);

    cli::RunConfig config;
    try {
        config = cli::load_config(path, overrides);
        if (!out.empty()) config.output.dir = out;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    if (check->parsed()) {
        std::cout << cli::serialize(config);
        return 0;
    }
    const cli::RunResult r = cli::run(config, std::cerr);
    for (const auto& a : r.artifacts) std::cout << a.string() << "\n";
    return r.exit_code;
}
