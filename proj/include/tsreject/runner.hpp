#ifndef TSREJECT_RUNNER_HPP
#define TSREJECT_RUNNER_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "tsreject/config.hpp"
#include "tsreject/pipeline.hpp"
#include "tsreject/tsio.hpp"

namespace tsreject::runner {

/// Artifact file names inside the configured output directory.
namespace files {
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* prepared = "prepared_split.txt";
inline constexpr const char* forecaster_model = "forecaster.txt";
inline constexpr const char* vae_model = "vae.txt";
inline constexpr const char* error_model = "error_model.txt";
inline constexpr const char* train_log = "train_log.csv";
inline constexpr const char* rejector = "rejector.txt";
inline constexpr const char* report_json = "report.json";
inline constexpr const char* report_windows = "report_windows.csv";
inline constexpr const char* sweep_csv = "sweep.csv";
inline constexpr const char* ablation_csv = "ablation.csv";
}  // namespace files

/// Normalized series plus the window/split geometry rebuilt from it.
struct PreparedData {
    Matrix normalized;
    tsio::NormalizationStats stats;
    Index lookback = 0;
    Index horizon = 0;
    Index stride = 1;
    std::vector<tsio::WindowPair> train;
    std::vector<tsio::WindowPair> validation;
    std::vector<tsio::WindowPair> test;
};

/// Ingest, normalize (train span only), window, split; persist the
/// artifacts and a manifest embedding the resolved config. Idempotent.
PreparedData run_prepare(const config::RunConfig& cfg);

PreparedData load_prepared(const config::RunConfig& cfg);

/// Fit forecaster (unless an external prediction file is configured),
/// VAE, and the validation-residual error model; persist all three plus a
/// per-epoch training log.
void run_train(const config::RunConfig& cfg);

/// Calibrate both rejectors on validation data and persist the thresholds
/// with their realized validation rates.
void run_calibrate(const config::RunConfig& cfg);

pipeline::RiskReport run_evaluate(const config::RunConfig& cfg);

std::vector<pipeline::SweepRow> run_sweep(const config::RunConfig& cfg);

std::vector<pipeline::AblationRow> run_ablate(const config::RunConfig& cfg);

/// Score one raw window file (L rows, with or without a leading time
/// column): decision, scores, and the denormalized prediction when
/// accepted.
nlohmann::json run_predict(const config::RunConfig& cfg, const std::string& window_csv);

nlohmann::json report_to_json(const pipeline::RiskReport& report, const std::string& mode);

}  // namespace tsreject::runner

#endif  // TSREJECT_RUNNER_HPP
