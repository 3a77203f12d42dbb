#include "config.hpp"
#include "experiments.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace {

void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot write " + path);
    out << contents;
}

}  // namespace

int main(int argc, char** argv)
{
    using namespace phaselattice::cli;

    CLI::App app{"Phase-space lattice experiments"};
    std::string experiment, config_path, out_prefix;
    std::uint64_t seed = 0;
    app.add_option("experiment", experiment, "Experiment to run")
        ->required()
        ->check(CLI::IsMember(experiment_names()));
    app.add_option("--config", config_path, "JSON configuration file")->required();
    auto* out_opt = app.add_option("--out", out_prefix, "Output path prefix");
    auto* seed_opt = app.add_option("--seed", seed, "Seed for randomised inputs");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    Outcome outcome;
    std::string prefix;
    try {
        ExperimentConfig config = load_config(config_path, experiment);
        if (*seed_opt)
            config.seed = seed;
        prefix = *out_opt ? out_prefix : (config.output.empty() ? "phaselattice_" + experiment : config.output);
        outcome = run_experiment(config);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "invalid input: " << e.what() << '\n';
        return 2;
    }

    try {
        const std::filesystem::path parent = std::filesystem::path(prefix).parent_path();
        if (!parent.empty())
            std::filesystem::create_directories(parent);
        write_file(prefix + ".json", outcome.summary.dump(2) + "\n");
        for (const auto& [suffix, contents] : outcome.files)
            write_file(prefix + suffix, contents);
    } catch (const std::exception& e) {
        std::cerr << "output error: " << e.what() << '\n';
        return 2;
    }
    std::cout << experiment << ": " << (outcome.pass ? "pass" : "fail") << " -> " << prefix << ".json\n";
    return outcome.pass ? 0 : 1;
}
