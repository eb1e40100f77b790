// tsreject: selective multivariate time-series forecasting with a dual
// reject option (error-variance ambiguity rejection + VAE-latent novelty
// rejection). Subcommands hand off through files in the output directory:
//
//   prepare -> train -> calibrate -> evaluate | sweep | ablate | predict
//
// Exit codes: 0 success, 2 config error, 3 data error, 4 numeric error,
// 1 anything else.

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tsreject/config.hpp"
#include "tsreject/runner.hpp"
#include "tsreject/serialize.hpp"

namespace {

using tsreject::config::RunConfig;

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string dataset;
    std::string output_dir;
    std::string predictions_file;
    long long seed = -1;
    std::string mode;
    double target_rate = -1.0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "JSON config file (or a run manifest)");
    cmd->add_option("--set", args.overrides,
                    "Override a config key, e.g. --set rejection.target_rate=0.05");
    cmd->add_option("--dataset", args.dataset, "Dataset CSV path, or 'synthetic'");
    cmd->add_option("--output-dir", args.output_dir, "Artifact directory");
    cmd->add_option("--predictions", args.predictions_file,
                    "External prediction CSV (origin_index,flattened values)");
    cmd->add_option("--seed", args.seed, "Run seed");
    cmd->add_option("--mode", args.mode, "Rejection mode: dual|ambiguity_only|novelty_only|none");
    cmd->add_option("--target-rate", args.target_rate, "Combined target rejection rate");
}

// Precedence: defaults < config file < TSREJECT_OUTPUT_DIR < flags.
RunConfig resolve_config(const CommonArgs& args) {
    nlohmann::json j = nlohmann::json::object();
    if (!args.config_path.empty()) {
        j = tsreject::config::to_json(tsreject::config::load(args.config_path));
    }
    if (const char* env = std::getenv("TSREJECT_OUTPUT_DIR"); env != nullptr && *env != '\0') {
        j["output_dir"] = env;
    }
    if (!args.dataset.empty()) j["dataset"] = args.dataset;
    if (!args.output_dir.empty()) j["output_dir"] = args.output_dir;
    if (!args.predictions_file.empty()) j["predictions_file"] = args.predictions_file;
    if (args.seed >= 0) j["seed"] = args.seed;
    if (!args.mode.empty()) j["rejection"]["mode"] = args.mode;
    if (args.target_rate >= 0.0) j["rejection"]["target_rate"] = args.target_rate;
    for (const auto& assignment : args.overrides) {
        tsreject::config::apply_override(j, assignment);
    }
    return tsreject::config::from_json(j);
}

void print_report(const tsreject::pipeline::RiskReport& report) {
    std::cout << "windows " << report.n_windows << ", rejected " << report.n_rejected
              << " (epsilon " << report.epsilon << ")\n"
              << "L_all " << report.l_all << ", L_accepted " << report.l_accepted << ", risk "
              << report.risk << "\n"
              << "mae_accepted " << report.mae_accepted << ", mse_accepted "
              << report.mse_accepted << "\n"
              << "bound_ideal " << report.bound_ideal << ", bound_random " << report.bound_random
              << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selective time-series forecasting with a dual reject option"};
    app.require_subcommand(1);

    CommonArgs args;
    std::string window_csv;

    auto* prepare = app.add_subcommand("prepare", "Load, normalize, window, and split a dataset");
    auto* train = app.add_subcommand("train", "Fit forecaster, VAE, and error-variance model");
    auto* calibrate = app.add_subcommand("calibrate", "Calibrate rejection thresholds");
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate the calibrated rejector on test");
    auto* sweep = app.add_subcommand("sweep", "Evaluate across a grid of target rates");
    auto* ablate = app.add_subcommand("ablate", "Compare Base/NRO/ARO/DRM at one target rate");
    auto* predict = app.add_subcommand("predict", "Score one raw window file");
    for (CLI::App* cmd : {prepare, train, calibrate, evaluate, sweep, ablate, predict}) {
        add_common(cmd, args);
    }
    predict->add_option("--window", window_csv, "CSV with one lookback window")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = resolve_config(args);
        if (prepare->parsed()) {
            const auto data = tsreject::runner::run_prepare(cfg);
            std::cout << "prepared " << data.train.size() << "/" << data.validation.size() << "/"
                      << data.test.size() << " train/val/test windows in " << cfg.output_dir
                      << "\n";
        } else if (train->parsed()) {
            tsreject::runner::run_train(cfg);
            std::cout << "trained models written to " << cfg.output_dir << "\n";
        } else if (calibrate->parsed()) {
            tsreject::runner::run_calibrate(cfg);
            std::cout << "rejector written to " << cfg.output_dir << "\n";
        } else if (evaluate->parsed()) {
            print_report(tsreject::runner::run_evaluate(cfg));
        } else if (sweep->parsed()) {
            const auto rows = tsreject::runner::run_sweep(cfg);
            std::cout << "sweep of " << rows.size() << " rates written to " << cfg.output_dir
                      << "/" << tsreject::runner::files::sweep_csv << "\n";
        } else if (ablate->parsed()) {
            const auto rows = tsreject::runner::run_ablate(cfg);
            for (const auto& row : rows) {
                std::cout << row.label << ": epsilon " << row.report.epsilon << ", mae_accepted "
                          << row.report.mae_accepted << ", risk " << row.report.risk << "\n";
            }
        } else if (predict->parsed()) {
            std::cout << tsreject::runner::run_predict(cfg, window_csv).dump(2) << "\n";
        }
        return 0;
    } catch (const tsreject::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const tsreject::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const tsreject::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
