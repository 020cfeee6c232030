// Command-line experiment runner.
//
//   folia run <config.json> [--out DIR]   run an experiment, write records.csv
//                                         and summary.json into DIR
//   folia validate <config.json>          report every config violation
//   folia --version
//
// Exit codes: 0 success, 2 validation failure, 3 numeric failure (for
// example an enumeration cap was exceeded).

#include <folia/folia.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

namespace {

int load_json(const std::string& path, nlohmann::json& out) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot read config file `" << path << "`\n";
        return 2;
    }
    try {
        in >> out;
    } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: config file `" << path << "` is not valid JSON: " << e.what()
                  << "\n";
        return 2;
    }
    return 0;
}

int run_command(const std::string& config_path, const std::string& outdir) {
    nlohmann::json config;
    if (const int status = load_json(config_path, config); status != 0) return status;

    const auto diagnostics = folia::experiment::validate_config(config);
    if (!diagnostics.empty()) {
        for (const auto& d : diagnostics) std::cerr << "invalid config: " << d << "\n";
        return 2;
    }

    try {
        const auto cfg = folia::experiment::parse_config(config);
        const auto result = folia::experiment::run_experiment(cfg, config, outdir);
        std::cout << "wrote " << result.records_path.string() << "\n";
        std::cout << "wrote " << result.summary_path.string() << "\n";
        return 0;
    } catch (const folia::CapExceeded& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    } catch (const folia::InvalidInput& e) {
        std::cerr << "invalid config: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return 3;
    }
}

int validate_command(const std::string& config_path) {
    nlohmann::json config;
    if (const int status = load_json(config_path, config); status != 0) return status;
    const auto diagnostics = folia::experiment::validate_config(config);
    if (diagnostics.empty()) {
        std::cout << "config is valid\n";
        return 0;
    }
    for (const auto& d : diagnostics) std::cout << d << "\n";
    return 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"folia: direct-integral history and Zeno-sweep experiments"};
    app.set_version_flag("--version", std::string("folia ") + folia::kVersion);
    app.require_subcommand(0, 1);

    std::string run_config, outdir = ".";
    CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("config", run_config, "experiment config (JSON)")->required();
    run->add_option("--out", outdir, "output directory (default: current directory)");

    std::string validate_config_path;
    CLI::App* validate =
        app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", validate_config_path, "experiment config (JSON)")
        ->required();

    CLI11_PARSE(app, argc, argv);

    if (run->parsed()) return run_command(run_config, outdir);
    if (validate->parsed()) return validate_command(validate_config_path);
    std::cout << app.help();
    return 0;
}
