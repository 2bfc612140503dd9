// Command line front end: run a config, run or print a preset, summarize a run directory.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "fdelab/fdelab.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 2;
constexpr int kSolver = 3;

void print_table(const fdelab::json& summary, std::ostream& out) {
    out << "run: " << summary.value("name", "?") << "  status: " << summary.value("status", "?") << '\n';
    for (const auto& d : summary.at("diagnostics"))
        out << "  " << d.at("status").get<std::string>() << "  " << d.at("name").get<std::string>() << '\n';
}

int run_and_persist(const fdelab::RunConfig& config) {
    fdelab::ExperimentResult result;
    try {
        result = fdelab::execute(config);
    } catch (const fdelab::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fdelab::NoSolution& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const fdelab::Error& e) {
        std::cerr << "solver failure: " << e.what() << '\n';
        return kSolver;
    }
    const fs::path dir = fdelab::make_run_directory(config);
    fdelab::write_artifacts(result, dir);
    print_table(fdelab::summary_json(result), std::cout);
    if (result.solver_failure) std::cerr << "solver failure: " << result.failure_message << '\n';
    std::cout << "artifacts: " << dir.string() << '\n';
    return result.exit_code();
}

int report(const fs::path& dir) {
    const fs::path file = dir / "summary.json";
    std::ifstream in(file);
    if (!in) {
        std::cerr << "error: no summary.json in '" << dir.string() << "'\n";
        return kUsage;
    }
    fdelab::json summary;
    try {
        summary = fdelab::json::parse(in);
    } catch (const fdelab::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    print_table(summary, std::cout);
    return summary.value("exit_code", 1);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fast diffusion numerical lab"};
    app.require_subcommand(1);

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
    run->add_option("config", config_path, "Path to the config file")->required();

    std::string preset_name;
    bool emit = false;
    auto* preset = app.add_subcommand("preset", "Run a named preset, or print its config with --emit");
    preset->add_option("name", preset_name, "Preset name")->required();
    preset->add_flag("--emit", emit, "Print the config JSON instead of running it");

    std::string report_dir;
    auto* rep = app.add_subcommand("report", "Print the PASS/FAIL table of a run directory");
    rep->add_option("dir", report_dir, "Run directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kUsage;
    }

    if (*run) {
        fdelab::RunConfig config;
        try {
            config = fdelab::load_config(config_path);
        } catch (const fdelab::Error& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kUsage;
        }
        return run_and_persist(config);
    }
    if (*preset) {
        fdelab::RunConfig config;
        try {
            config = fdelab::preset(preset_name);
        } catch (const fdelab::ConfigError& e) {
            std::cerr << "error: " << e.what() << '\n';
            return kUsage;
        }
        if (emit) {
            std::cout << fdelab::to_json(config).dump(2) << '\n';
            return 0;
        }
        return run_and_persist(config);
    }
    return report(report_dir);
}
