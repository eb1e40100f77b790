#ifndef TSREJECT_CONFIG_HPP
#define TSREJECT_CONFIG_HPP

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsreject/common.hpp"
#include "tsreject/forecaster.hpp"
#include "tsreject/synthetic.hpp"
#include "tsreject/vae.hpp"

namespace tsreject::config {

struct ForecasterConfig {
    std::string kind = "ridge";  // ridge | mlp
    double ridge_lambda = 1e-3;
    forecaster::MlpHyperparams mlp;
};

struct RejectionConfig {
    std::string mode = "dual";          // dual | ambiguity_only | novelty_only | none
    std::string calibration = "rate";   // rate | interval
    double target_rate = 0.10;
    double alpha = 0.05;
    double interval_width = 1.0;        // W, interval mode only
    double lambda = 0.0;                 // rejection weight in the risk
    double cost = 0.1;                   // fixed cost c of one rejection
    std::string feature_mode = "latent"; // latent | input
    std::string error_metric = "squared";
    bool centered_variance = false;
    // rate: quantile of validation novelty scores; chi: chi-distribution
    // quantile with latent_dim dof (heuristic, for runs without a usable
    // validation set; latents are not exactly Gaussian).
    std::string novelty_calibration = "rate";
};

/**
 * Fully resolved run configuration. Every field has a default; unknown
 * keys in the file are a hard error. "synthetic" as dataset selects the
 * built-in generator (its own seed, so prepare artifacts never depend on
 * the run seed).
 */
struct RunConfig {
    std::string dataset = "synthetic";
    bool has_header = true;
    Index lookback = 24;
    Index horizon = 8;
    Index stride = 1;
    std::array<double, 3> split_ratios = {0.7, 0.1, 0.2};
    ForecasterConfig forecaster;
    vae::VaeHyperparams vae;
    RejectionConfig rejection;
    std::vector<double> sweep_rates = {0.0, 0.02, 0.06, 0.10, 0.12, 0.16};
    std::uint64_t seed = 42;
    std::string output_dir = "out";
    std::string predictions_file;  // optional external forecaster plug-in
    synthetic::SyntheticSpec synthetic;
};

/// Parse with defaults for absent keys; any unknown key is a ConfigError.
RunConfig from_json(const nlohmann::json& j);

/// Resolved configuration, every field explicit.
nlohmann::json to_json(const RunConfig& cfg);

/**
 * Load a config file. A manifest written by the prepare command (marked
 * with "tsreject_manifest") is accepted too; its embedded resolved config
 * is used, so a run can be reproduced straight from its manifest.
 */
RunConfig load(const std::string& path);

/// Apply one dotted-path override, e.g. "rejection.target_rate=0.05".
/// The value is parsed as JSON when possible, else taken as a string.
void apply_override(nlohmann::json& j, const std::string& assignment);

/// FNV-1a hash of the canonical JSON dump, as fixed-width hex.
std::string json_hash(const nlohmann::json& j);

/// Hash of the prepare-relevant fields only (dataset, windowing, split,
/// synthetic block); deliberately independent of the run seed.
std::string prepare_hash(const RunConfig& cfg);

}  // namespace tsreject::config

#endif  // TSREJECT_CONFIG_HPP
