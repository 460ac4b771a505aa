// scod: selective classification with OOD detection on synthetic
// benchmarks and externally exported logits.
#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "scod/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

// SCOD_OUTPUT_DIR overrides every output directory.
void apply_output_override(std::string& dir) {
    if (const char* env = std::getenv("SCOD_OUTPUT_DIR"); env && *env) dir = env;
}

int guarded(const std::function<void()>& body) {
    try {
        body();
        return 0;
    } catch (const scod::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const scod::LogitsFormatError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const scod::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const scod::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective classification with OOD detection"};
    app.require_subcommand(1);

    std::string config_path, logits_path, method, scenario, output_dir = ".";
    double c_fn = 0.75;
    int grid_size = 101;

    auto* run = app.add_subcommand("run", "Run an experiment config");
    run->add_option("config", config_path, "JSON config file")->required();

    auto* ingest = app.add_subcommand("ingest-check", "Validate a logits file");
    ingest->add_option("logits-file", logits_path, "scod-logits v1 file")->required();

    auto* curve = app.add_subcommand("curve", "Risk-coverage curve for one method");
    curve->add_option("logits-file", logits_path, "scod-logits v1 file")->required();
    curve->add_option("--method", method, "Registered method name")->required();
    curve->add_option("--c-fn", c_fn, "False-negative outlier cost");
    curve->add_option("--grid-size", grid_size, "Abstention grid points");
    curve->add_option("--output-dir", output_dir, "Artifact directory");

    auto* budget = app.add_subcommand("budget", "Budget-constrained threshold search");
    budget->add_option("config", config_path, "JSON config file")->required();

    auto* demo = app.add_subcommand("demo", "Run a bundled synthetic scenario");
    demo->add_option("scenario", scenario,
                     "open-set | uniform-outlier | wild-mixture")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (run->parsed()) {
        return guarded([&] {
            scod::ExperimentConfig cfg = scod::load_config_file(config_path);
            apply_output_override(cfg.output_dir);
            scod::run_experiment(cfg, std::cout);
        });
    }
    if (ingest->parsed())
        return guarded([&] { scod::run_ingest_check(logits_path, std::cout); });
    if (curve->parsed()) {
        return guarded([&] {
            apply_output_override(output_dir);
            scod::run_curve(logits_path, method, c_fn, grid_size, output_dir,
                            std::cout);
        });
    }
    if (budget->parsed()) {
        return guarded([&] {
            scod::ExperimentConfig cfg = scod::load_config_file(config_path);
            apply_output_override(cfg.output_dir);
            scod::run_budget(cfg, std::cout);
        });
    }
    return guarded([&] {
        scod::ExperimentConfig cfg = scod::demo_config(scenario);
        apply_output_override(cfg.output_dir);
        scod::run_experiment(cfg, std::cout);
        scod::run_budget(cfg, std::cout);
    });
}
