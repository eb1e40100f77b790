#include "tsreject/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "tsreject/serialize.hpp"
#include "tsreject/synthetic.hpp"

namespace tsreject::runner {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string artifact_path(const config::RunConfig& cfg, const char* name) {
    return (fs::path(cfg.output_dir) / name).string();
}

std::string require_artifact(const config::RunConfig& cfg, const char* name,
                             const std::string& producer) {
    const std::string path = artifact_path(cfg, name);
    if (!fs::exists(path)) {
        throw DataError("missing artifact " + path + "; run `tsreject " + producer + "` first");
    }
    return path;
}

json nan_safe(double v) {
    if (std::isnan(v)) return nullptr;
    return v;
}

tsio::RawSeries load_series(const config::RunConfig& cfg) {
    if (cfg.dataset == "synthetic") return synthetic::generate(cfg.synthetic);
    return tsio::load_csv(cfg.dataset, cfg.has_header);
}

std::vector<Vector> flattened_inputs(const std::vector<tsio::WindowPair>& windows) {
    std::vector<Vector> flat;
    flat.reserve(windows.size());
    for (const auto& w : windows) flat.push_back(flatten(w.input));
    return flat;
}

std::unique_ptr<forecaster::Forecaster> load_model(const config::RunConfig& cfg,
                                                   const PreparedData& prepared) {
    if (!cfg.predictions_file.empty()) {
        return std::make_unique<forecaster::PredictionTableForecaster>(
            cfg.predictions_file, prepared.horizon, prepared.normalized.cols());
    }
    return forecaster::load_forecaster(require_artifact(cfg, files::forecaster_model, "train"));
}

pipeline::RejectorComponents load_components(const config::RunConfig& cfg,
                                             const PreparedData& prepared) {
    pipeline::RejectorComponents parts;
    parts.vae_params =
        vae::VaeParams::load(require_artifact(cfg, files::vae_model, "train"));
    const auto est_doc =
        serialize::Document::load(require_artifact(cfg, files::error_model, "train"));
    parts.estimator = ambiguity::ErrorVarianceEstimator::read_from(est_doc);
    parts.alpha = cfg.rejection.alpha;
    parts.summary = novelty::fit_latent_summary(parts.vae_params, flattened_inputs(prepared.train));
    return parts;
}

pipeline::DualRejector load_rejector(const config::RunConfig& cfg,
                                     const pipeline::RejectorComponents& parts) {
    const auto doc = serialize::Document::load(require_artifact(cfg, files::rejector, "calibrate"));
    pipeline::DualRejector rejector;
    // The config mode governs evaluation; a disabled sub-rejector keeps its
    // +inf sentinel threshold and simply never fires.
    rejector.mode = pipeline::mode_from_string(cfg.rejection.mode);
    rejector.ambiguity = ambiguity::read_rejector(doc);
    rejector.novelty = novelty::read_rejector(doc);
    rejector.novelty.vae_params = parts.vae_params;
    return rejector;
}

pipeline::EvalOptions eval_options(const config::RunConfig& cfg) {
    pipeline::EvalOptions options;
    options.lambda = cfg.rejection.lambda;
    options.metric = forecaster::error_metric_from_string(cfg.rejection.error_metric);
    return options;
}

void rebuild_windows(PreparedData& data, Index n_train, Index n_val) {
    auto windows = tsio::make_windows(data.normalized, data.lookback, data.horizon, data.stride);
    const auto n_total = static_cast<Index>(windows.size());
    for (Index i = 0; i < n_total; ++i) {
        auto& w = windows[static_cast<size_t>(i)];
        if (i < n_train) {
            data.train.push_back(std::move(w));
        } else if (i < n_train + n_val) {
            data.validation.push_back(std::move(w));
        } else {
            data.test.push_back(std::move(w));
        }
    }
}

}  // namespace

PreparedData run_prepare(const config::RunConfig& cfg) {
    const tsio::RawSeries series = load_series(cfg);
    const auto all_raw =
        tsio::make_windows(series.values, cfg.lookback, cfg.horizon, cfg.stride);
    const auto span = tsio::train_row_span(static_cast<Index>(all_raw.size()), cfg.split_ratios,
                                           cfg.lookback, cfg.horizon, cfg.stride);

    PreparedData data;
    data.stats = tsio::fit_normalization(series, span);
    data.normalized = tsio::normalize(series.values, data.stats);
    data.lookback = cfg.lookback;
    data.horizon = cfg.horizon;
    data.stride = cfg.stride;

    auto split = tsio::split_dataset(
        tsio::make_windows(data.normalized, cfg.lookback, cfg.horizon, cfg.stride),
        cfg.split_ratios);
    split.norm_stats = data.stats;
    data.train = std::move(split.train);
    data.validation = std::move(split.validation);
    data.test = std::move(split.test);

    fs::create_directories(cfg.output_dir);

    serialize::Document doc;
    doc.put_str("kind", "prepared_split");
    doc.put_mat("normalized", data.normalized);
    doc.put_vec("mean", data.stats.mean);
    doc.put_vec("std", data.stats.std);
    std::string degenerate;
    for (Index c : data.stats.degenerate_columns) {
        if (!degenerate.empty()) degenerate += ' ';
        degenerate += std::to_string(c);
    }
    doc.put_str("degenerate_columns", degenerate);
    doc.put_int("lookback", data.lookback);
    doc.put_int("horizon", data.horizon);
    doc.put_int("stride", data.stride);
    doc.put_int("n_train", static_cast<long long>(data.train.size()));
    doc.put_int("n_val", static_cast<long long>(data.validation.size()));
    doc.put_int("n_test", static_cast<long long>(data.test.size()));
    doc.save(artifact_path(cfg, files::prepared));

    const json resolved = config::to_json(cfg);
    const json manifest{
        {"tsreject_manifest", 1},
        {"prepare_hash", config::prepare_hash(cfg)},
        {"config_hash", config::json_hash(resolved)},
        {"config", resolved},
    };
    std::ofstream out(artifact_path(cfg, files::manifest));
    if (!out) throw DataError("cannot write manifest in " + cfg.output_dir);
    out << manifest.dump(2) << "\n";
    return data;
}

PreparedData load_prepared(const config::RunConfig& cfg) {
    const auto doc = serialize::Document::load(require_artifact(cfg, files::prepared, "prepare"));
    PreparedData data;
    data.normalized = doc.get_mat("normalized");
    data.stats.mean = doc.get_vec("mean");
    data.stats.std = doc.get_vec("std");
    data.lookback = doc.get_int("lookback");
    data.horizon = doc.get_int("horizon");
    data.stride = doc.get_int("stride");
    rebuild_windows(data, doc.get_int("n_train"), doc.get_int("n_val"));
    if (static_cast<long long>(data.test.size()) != doc.get_int("n_test")) {
        throw DataError("prepared split is inconsistent; rerun `tsreject prepare`");
    }
    return data;
}

void run_train(const config::RunConfig& cfg) {
    const PreparedData data = load_prepared(cfg);
    std::ofstream log(artifact_path(cfg, files::train_log));
    if (!log) throw DataError("cannot write training log in " + cfg.output_dir);
    log << "stage,epoch,loss\n";

    // Point forecaster (skipped when external predictions are plugged in).
    std::unique_ptr<forecaster::Forecaster> model;
    if (cfg.predictions_file.empty()) {
        model = forecaster::make_forecaster(cfg.forecaster.kind, cfg.forecaster.ridge_lambda,
                                            cfg.forecaster.mlp);
        model->fit(data.train, cfg.seed);
        model->to_document().save(artifact_path(cfg, files::forecaster_model));
        if (auto* mlp = dynamic_cast<forecaster::MlpForecaster*>(model.get())) {
            const auto& losses = mlp->training_log();
            for (size_t e = 0; e < losses.size(); ++e) {
                log << "forecaster," << e << "," << serialize::format_double(losses[e]) << "\n";
            }
        }
    } else {
        model = std::make_unique<forecaster::PredictionTableForecaster>(
            cfg.predictions_file, data.horizon, data.normalized.cols());
    }

    // VAE over the flattened (normalized) input windows of the train split.
    vae::VaeHyperparams hp = cfg.vae;
    std::vector<double> vae_log;
    const auto vae_params = vae::train_vae(flattened_inputs(data.train), hp, cfg.seed, &vae_log);
    vae_params.save(artifact_path(cfg, files::vae_model));
    for (size_t e = 0; e < vae_log.size(); ++e) {
        log << "vae," << e << "," << serialize::format_double(vae_log[e]) << "\n";
    }

    // Error-variance model on validation residuals: training residuals
    // understate deployment error, so they never enter this fit.
    const auto metric = forecaster::error_metric_from_string(cfg.rejection.error_metric);
    const auto records = forecaster::collect_residuals(*model, data.validation, metric);
    const auto mode = ambiguity::feature_mode_from_string(cfg.rejection.feature_mode);
    ambiguity::ErrorVarianceEstimator estimator;
    if (mode == ambiguity::FeatureMode::latent_mean) {
        std::vector<Vector> features;
        std::vector<double> errors;
        features.reserve(records.size());
        for (const auto& rec : records) {
            features.push_back(vae::encode(vae_params, rec.features).mu);
            errors.push_back(rec.error);
        }
        estimator = ambiguity::fit_error_model(features, errors, mode);
    } else {
        estimator = ambiguity::fit_error_model(records, mode);
    }
    serialize::Document est_doc;
    est_doc.put_str("kind", "error_model");
    estimator.write_to(est_doc);
    // Diagnostic: prediction-error variance over the validation windows'
    // RMS residuals, uncentered unless configured otherwise.
    std::vector<double> rms;
    rms.reserve(records.size());
    for (const auto& rec : records) {
        rms.push_back(metric == forecaster::ErrorMetric::squared ? std::sqrt(rec.error)
                                                                 : rec.error);
    }
    est_doc.put_num("residual_error_variance",
                    stats::error_variance(rms, cfg.rejection.centered_variance));
    est_doc.put_int("centered_variance", cfg.rejection.centered_variance ? 1 : 0);
    est_doc.save(artifact_path(cfg, files::error_model));
}

void run_calibrate(const config::RunConfig& cfg) {
    const PreparedData data = load_prepared(cfg);
    const auto parts = load_components(cfg, data);
    const auto mode = pipeline::mode_from_string(cfg.rejection.mode);

    const auto val_var = pipeline::variance_scores(parts, data.validation);
    const auto val_nov = pipeline::novelty_scores(parts, data.validation);

    pipeline::DualRejector rejector;
    if (cfg.rejection.calibration == "interval") {
        // Interval mode fixes the ambiguity threshold from (alpha, W);
        // the rate target then applies to the novelty side alone.
        rejector.mode = mode;
        rejector.novelty.vae_params = parts.vae_params;
        rejector.novelty.summary = parts.summary;
        stats::ConfidenceSpec spec;
        spec.alpha = cfg.rejection.alpha;
        spec.dof = std::max<long>(1, static_cast<long>(val_var.size()) - 1);
        rejector.ambiguity = ambiguity::calibrate_ambiguity_interval(
            parts.estimator, cfg.rejection.interval_width, spec);
        rejector.ambiguity.realized_val_rate =
            stats::realized_rejection_rate(val_var, rejector.ambiguity.var_threshold);
        if (mode == pipeline::RejectionMode::dual ||
            mode == pipeline::RejectionMode::novelty_only) {
            rejector.novelty.d_threshold =
                novelty::calibrate_novelty(val_nov, cfg.rejection.target_rate);
            rejector.novelty.realized_val_rate =
                stats::realized_rejection_rate(val_nov, rejector.novelty.d_threshold);
        }
    } else {
        rejector = pipeline::calibrate_dual(parts, val_var, val_nov, mode,
                                            cfg.rejection.target_rate);
    }

    // Heuristic alternative when no trustworthy validation data exists:
    // chi-distribution quantile with latent_dim dof in place of the
    // empirical novelty quantile. The budget split matches rate mode.
    const bool novelty_active = (mode == pipeline::RejectionMode::dual ||
                                 mode == pipeline::RejectionMode::novelty_only) &&
                                cfg.rejection.target_rate > 0.0;
    if (cfg.rejection.novelty_calibration == "chi" && novelty_active) {
        const double novelty_rate = mode == pipeline::RejectionMode::dual
                                        ? cfg.rejection.target_rate / 2.0
                                        : cfg.rejection.target_rate;
        rejector.novelty.d_threshold =
            novelty::chi_threshold(1.0 - novelty_rate, parts.vae_params.latent_dim());
        rejector.novelty.realized_val_rate =
            stats::realized_rejection_rate(val_nov, rejector.novelty.d_threshold);
    }

    serialize::Document doc;
    doc.put_str("kind", "dual_rejector");
    doc.put_str("mode", pipeline::to_string(rejector.mode));
    doc.put_num("target_rate", cfg.rejection.target_rate);
    ambiguity::write_rejector(rejector.ambiguity, doc);
    novelty::write_rejector(rejector.novelty, doc);
    doc.save(artifact_path(cfg, files::rejector));
}

json report_to_json(const pipeline::RiskReport& report, const std::string& mode) {
    return json{
        {"mode", mode},
        {"n_windows", report.n_windows},
        {"n_rejected", report.n_rejected},
        {"epsilon", report.epsilon},
        {"L_accepted", nan_safe(report.l_accepted)},
        {"L_all", report.l_all},
        {"risk", report.risk},
        {"lambda", report.lambda},
        {"mae_accepted", nan_safe(report.mae_accepted)},
        {"mse_accepted", nan_safe(report.mse_accepted)},
        {"bound_ideal", report.bound_ideal},
        {"bound_random", report.bound_random},
    };
}

pipeline::RiskReport run_evaluate(const config::RunConfig& cfg) {
    const PreparedData data = load_prepared(cfg);
    const auto parts = load_components(cfg, data);
    const auto rejector = load_rejector(cfg, parts);
    const auto model = load_model(cfg, data);

    const auto report = pipeline::evaluate(rejector, data.test, *model, eval_options(cfg));

    std::ofstream out(artifact_path(cfg, files::report_json));
    if (!out) throw DataError("cannot write report in " + cfg.output_dir);
    out << report_to_json(report, pipeline::to_string(rejector.mode)).dump(2) << "\n";
    pipeline::write_report_csv(report, artifact_path(cfg, files::report_windows));
    return report;
}

std::vector<pipeline::SweepRow> run_sweep(const config::RunConfig& cfg) {
    const PreparedData data = load_prepared(cfg);
    const auto parts = load_components(cfg, data);
    const auto model = load_model(cfg, data);
    const auto mode = pipeline::mode_from_string(cfg.rejection.mode);

    auto rows = pipeline::sweep(parts, data.validation, data.test, *model, eval_options(cfg),
                                cfg.sweep_rates, mode);
    pipeline::write_sweep_csv(rows, artifact_path(cfg, files::sweep_csv));
    return rows;
}

std::vector<pipeline::AblationRow> run_ablate(const config::RunConfig& cfg) {
    const PreparedData data = load_prepared(cfg);
    const auto parts = load_components(cfg, data);
    const auto model = load_model(cfg, data);

    auto rows = pipeline::ablate(parts, data.validation, data.test, *model, eval_options(cfg),
                                 cfg.rejection.target_rate);
    pipeline::write_ablation_csv(rows, artifact_path(cfg, files::ablation_csv));
    return rows;
}

nlohmann::json run_predict(const config::RunConfig& cfg, const std::string& window_csv) {
    const PreparedData data = load_prepared(cfg);
    const auto parts = load_components(cfg, data);
    const auto rejector = load_rejector(cfg, parts);

    // The window file may or may not carry the leading time-label column.
    const Index n_vars = data.normalized.cols();
    std::ifstream probe(window_csv);
    if (!probe) throw DataError("cannot open window file: " + window_csv);
    std::string first_line;
    std::getline(probe, first_line);
    const auto commas = std::count(first_line.begin(), first_line.end(), ',');
    probe.close();

    Matrix raw(data.lookback, n_vars);
    if (commas == n_vars) {
        const auto series = tsio::load_csv(window_csv, false);
        if (series.rows() != data.lookback) {
            throw DataError("window file must have exactly " + std::to_string(data.lookback) +
                            " rows, got " + std::to_string(series.rows()));
        }
        raw = series.values;
    } else if (commas == n_vars - 1) {
        std::ifstream in(window_csv);
        std::string line;
        Index r = 0;
        while (std::getline(in, line) && r < data.lookback) {
            std::stringstream ss(line);
            std::string cell;
            for (Index c = 0; c < n_vars; ++c) {
                if (!std::getline(ss, cell, ',')) {
                    throw DataError("window file row " + std::to_string(r + 1) + " is short");
                }
                raw(r, c) = std::stod(cell);
            }
            ++r;
        }
        if (r != data.lookback) {
            throw DataError("window file must have exactly " + std::to_string(data.lookback) +
                            " rows, got " + std::to_string(r));
        }
    } else {
        throw DataError("window file must have " + std::to_string(n_vars) + " value columns");
    }

    const Matrix normalized = tsio::normalize(raw, data.stats);
    const auto decision = pipeline::decide_total(rejector, flatten(normalized));

    json out{
        {"decision", decision.decision},
        {"rejected", decision.decision == 1},
        {"novelty_score", decision.novelty_score ? json(*decision.novelty_score) : json(nullptr)},
        {"variance_score",
         decision.variance_score ? json(*decision.variance_score) : json(nullptr)},
        {"var_threshold", nan_safe(rejector.ambiguity.var_threshold)},
        {"d_threshold", nan_safe(rejector.novelty.d_threshold)},
        {"mode", pipeline::to_string(rejector.mode)},
        {"prediction", nullptr},
    };
    if (decision.decision == 0) {
        const auto model = load_model(cfg, data);
        const Matrix prediction = tsio::denormalize(model->predict(normalized), data.stats);
        std::vector<std::vector<double>> rows;
        rows.reserve(static_cast<size_t>(prediction.rows()));
        for (Index r = 0; r < prediction.rows(); ++r) {
            std::vector<double> row(static_cast<size_t>(prediction.cols()));
            for (Index c = 0; c < prediction.cols(); ++c) row[static_cast<size_t>(c)] =
                prediction(r, c);
            rows.push_back(std::move(row));
        }
        out["prediction"] = rows;
    }
    return out;
}

}  // namespace tsreject::runner
