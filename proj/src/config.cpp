#include "tsreject/config.hpp"

#include <fstream>

namespace tsreject::config {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& scope,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ConfigError("config: " + (scope.empty() ? "top level" : scope) +
                          " must be an object");
    }
    for (const auto& [key, _] : j.items()) {
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError("config: unknown key '" + (scope.empty() ? key : scope + "." + key) +
                              "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& target) {
    if (!j.contains(key)) return;
    try {
        target = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError("config: bad value for '" + std::string(key) + "': " + e.what());
    }
}

}  // namespace

RunConfig from_json(const nlohmann::json& j) {
    RunConfig cfg;
    check_keys(j, "",
               {"dataset", "has_header", "lookback", "horizon", "stride", "split", "forecaster",
                "vae", "rejection", "sweep_rates", "seed", "output_dir", "predictions_file",
                "synthetic"});
    read(j, "dataset", cfg.dataset);
    read(j, "has_header", cfg.has_header);
    read(j, "lookback", cfg.lookback);
    read(j, "horizon", cfg.horizon);
    read(j, "stride", cfg.stride);
    read(j, "sweep_rates", cfg.sweep_rates);
    read(j, "seed", cfg.seed);
    read(j, "output_dir", cfg.output_dir);
    read(j, "predictions_file", cfg.predictions_file);

    if (j.contains("split")) {
        const json& s = j.at("split");
        check_keys(s, "split", {"train", "val", "test"});
        read(s, "train", cfg.split_ratios[0]);
        read(s, "val", cfg.split_ratios[1]);
        read(s, "test", cfg.split_ratios[2]);
    }
    if (j.contains("forecaster")) {
        const json& f = j.at("forecaster");
        check_keys(f, "forecaster",
                   {"kind", "ridge_lambda", "hidden_dim", "epochs", "learning_rate"});
        read(f, "kind", cfg.forecaster.kind);
        read(f, "ridge_lambda", cfg.forecaster.ridge_lambda);
        read(f, "hidden_dim", cfg.forecaster.mlp.hidden_dim);
        read(f, "epochs", cfg.forecaster.mlp.epochs);
        read(f, "learning_rate", cfg.forecaster.mlp.learning_rate);
        if (cfg.forecaster.kind != "ridge" && cfg.forecaster.kind != "mlp") {
            throw ConfigError("config: forecaster.kind must be ridge or mlp");
        }
    }
    if (j.contains("vae")) {
        const json& v = j.at("vae");
        check_keys(v, "vae", {"latent_dim", "hidden_dim", "epochs", "learning_rate"});
        read(v, "latent_dim", cfg.vae.latent_dim);
        read(v, "hidden_dim", cfg.vae.hidden_dim);
        read(v, "epochs", cfg.vae.epochs);
        read(v, "learning_rate", cfg.vae.learning_rate);
    }
    if (j.contains("rejection")) {
        const json& r = j.at("rejection");
        check_keys(r, "rejection",
                   {"mode", "calibration", "target_rate", "alpha", "interval_width", "lambda",
                    "cost", "feature_mode", "error_metric", "centered_variance",
                    "novelty_calibration"});
        read(r, "mode", cfg.rejection.mode);
        read(r, "calibration", cfg.rejection.calibration);
        read(r, "target_rate", cfg.rejection.target_rate);
        read(r, "alpha", cfg.rejection.alpha);
        read(r, "interval_width", cfg.rejection.interval_width);
        read(r, "lambda", cfg.rejection.lambda);
        read(r, "cost", cfg.rejection.cost);
        read(r, "feature_mode", cfg.rejection.feature_mode);
        read(r, "error_metric", cfg.rejection.error_metric);
        read(r, "centered_variance", cfg.rejection.centered_variance);
        read(r, "novelty_calibration", cfg.rejection.novelty_calibration);
        if (cfg.rejection.novelty_calibration != "rate" &&
            cfg.rejection.novelty_calibration != "chi") {
            throw ConfigError("config: rejection.novelty_calibration must be rate or chi");
        }
        if (cfg.rejection.calibration != "rate" && cfg.rejection.calibration != "interval") {
            throw ConfigError("config: rejection.calibration must be rate or interval");
        }
        if (cfg.rejection.mode != "dual" && cfg.rejection.mode != "ambiguity_only" &&
            cfg.rejection.mode != "novelty_only" && cfg.rejection.mode != "none") {
            throw ConfigError(
                "config: rejection.mode must be dual|ambiguity_only|novelty_only|none");
        }
        if (cfg.rejection.feature_mode != "input" && cfg.rejection.feature_mode != "latent") {
            throw ConfigError("config: rejection.feature_mode must be input or latent");
        }
        if (cfg.rejection.error_metric != "squared" && cfg.rejection.error_metric != "absolute") {
            throw ConfigError("config: rejection.error_metric must be squared or absolute");
        }
    }
    if (j.contains("synthetic")) {
        const json& s = j.at("synthetic");
        check_keys(s, "synthetic",
                   {"length", "variables", "ood_fraction", "ood_start", "ood_shift", "noise_base",
                    "noise_scale", "seed"});
        read(s, "length", cfg.synthetic.length);
        read(s, "variables", cfg.synthetic.variables);
        read(s, "ood_fraction", cfg.synthetic.ood_fraction);
        read(s, "ood_start", cfg.synthetic.ood_start);
        read(s, "ood_shift", cfg.synthetic.ood_shift);
        read(s, "noise_base", cfg.synthetic.noise_base);
        read(s, "noise_scale", cfg.synthetic.noise_scale);
        read(s, "seed", cfg.synthetic.seed);
    }
    return cfg;
}

nlohmann::json to_json(const RunConfig& cfg) {
    return nlohmann::json{
        {"dataset", cfg.dataset},
        {"has_header", cfg.has_header},
        {"lookback", cfg.lookback},
        {"horizon", cfg.horizon},
        {"stride", cfg.stride},
        {"split",
         {{"train", cfg.split_ratios[0]}, {"val", cfg.split_ratios[1]},
          {"test", cfg.split_ratios[2]}}},
        {"forecaster",
         {{"kind", cfg.forecaster.kind},
          {"ridge_lambda", cfg.forecaster.ridge_lambda},
          {"hidden_dim", cfg.forecaster.mlp.hidden_dim},
          {"epochs", cfg.forecaster.mlp.epochs},
          {"learning_rate", cfg.forecaster.mlp.learning_rate}}},
        {"vae",
         {{"latent_dim", cfg.vae.latent_dim},
          {"hidden_dim", cfg.vae.hidden_dim},
          {"epochs", cfg.vae.epochs},
          {"learning_rate", cfg.vae.learning_rate}}},
        {"rejection",
         {{"mode", cfg.rejection.mode},
          {"calibration", cfg.rejection.calibration},
          {"target_rate", cfg.rejection.target_rate},
          {"alpha", cfg.rejection.alpha},
          {"interval_width", cfg.rejection.interval_width},
          {"lambda", cfg.rejection.lambda},
          {"cost", cfg.rejection.cost},
          {"feature_mode", cfg.rejection.feature_mode},
          {"error_metric", cfg.rejection.error_metric},
          {"centered_variance", cfg.rejection.centered_variance},
          {"novelty_calibration", cfg.rejection.novelty_calibration}}},
        {"sweep_rates", cfg.sweep_rates},
        {"seed", cfg.seed},
        {"output_dir", cfg.output_dir},
        {"predictions_file", cfg.predictions_file},
        {"synthetic",
         {{"length", cfg.synthetic.length},
          {"variables", cfg.synthetic.variables},
          {"ood_fraction", cfg.synthetic.ood_fraction},
          {"ood_start", cfg.synthetic.ood_start},
          {"ood_shift", cfg.synthetic.ood_shift},
          {"noise_base", cfg.synthetic.noise_base},
          {"noise_scale", cfg.synthetic.noise_scale},
          {"seed", cfg.synthetic.seed}}},
    };
}

RunConfig load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config parse error in " + path + ": " + e.what());
    }
    if (j.is_object() && j.contains("tsreject_manifest")) {
        if (!j.contains("config")) {
            throw ConfigError("manifest " + path + " has no embedded config");
        }
        j = j.at("config");
    }
    return from_json(j);
}

void apply_override(nlohmann::json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
    }
    std::string pointer = "/" + assignment.substr(0, eq);
    for (auto& c : pointer) {
        if (c == '.') c = '/';
    }
    const std::string raw = assignment.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;  // unquoted strings are taken literally
    }
    try {
        j[nlohmann::json::json_pointer(pointer)] = value;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad override '" + assignment + "': " + e.what());
    }
}

std::string json_hash(const nlohmann::json& j) {
    const std::string dump = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string prepare_hash(const RunConfig& cfg) {
    const nlohmann::json full = to_json(cfg);
    nlohmann::json subset{
        {"dataset", full.at("dataset")},       {"has_header", full.at("has_header")},
        {"lookback", full.at("lookback")},     {"horizon", full.at("horizon")},
        {"stride", full.at("stride")},         {"split", full.at("split")},
        {"synthetic", full.at("synthetic")},
    };
    return json_hash(subset);
}

}  // namespace tsreject::config
