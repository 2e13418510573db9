// mmspa: tables, figures, simulations and verifications for minimax-regret auctions.

#include "mmspa/cli.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Minimax-regret second-price auctions: tables, figures, simulation and verification"};
    app.require_subcommand(1, 1);

    mmspa::cli::CommandConfig config;
    int n = 0;
    std::size_t samples = 0;
    for (const std::string& name : mmspa::cli::command_names()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--n", n, "number of buyers")->check(CLI::PositiveNumber);
        sub->add_option("--seed", config.seed, "master seed (default 0)");
        sub->add_option("--samples", samples, "Monte Carlo draws / random vectors")->check(CLI::PositiveNumber);
        sub->add_option("--grid", config.grid, "grid points (default 512)")->check(CLI::Range(2, 1 << 20));
        sub->add_option("--format", config.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        sub->add_option("--out", config.out_path, "write the document to this path");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    CLI::App* chosen = app.get_subcommands().front();
    config.command = chosen->get_name();
    if (chosen->count("--n")) config.n = n;
    if (chosen->count("--samples")) config.samples = samples;

    const mmspa::cli::CommandResult result = mmspa::cli::run(config);
    if (!config.out_path || result.exit_code != 0) {
        (result.exit_code == 0 ? std::cout : std::cerr) << result.document;
    }
    return result.exit_code;
}
