#include "tsreject/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

namespace tsreject::pipeline {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kInf = std::numeric_limits<double>::infinity();

bool uses_novelty(RejectionMode mode) {
    return mode == RejectionMode::dual || mode == RejectionMode::novelty_only;
}

bool uses_ambiguity(RejectionMode mode) {
    return mode == RejectionMode::dual || mode == RejectionMode::ambiguity_only;
}

std::string field(const std::optional<double>& value) {
    return value ? serialize::format_double(*value) : std::string{};
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    return out;
}

}  // namespace

RejectionMode mode_from_string(const std::string& name) {
    if (name == "dual") return RejectionMode::dual;
    if (name == "ambiguity_only") return RejectionMode::ambiguity_only;
    if (name == "novelty_only") return RejectionMode::novelty_only;
    if (name == "none") return RejectionMode::none;
    throw ConfigError("unknown rejection mode '" + name +
                      "' (expected dual|ambiguity_only|novelty_only|none)");
}

std::string to_string(RejectionMode mode) {
    switch (mode) {
        case RejectionMode::dual: return "dual";
        case RejectionMode::ambiguity_only: return "ambiguity_only";
        case RejectionMode::novelty_only: return "novelty_only";
        case RejectionMode::none: return "none";
    }
    return "none";
}

std::string mode_label(RejectionMode mode) {
    switch (mode) {
        case RejectionMode::none: return "Base";
        case RejectionMode::novelty_only: return "NRO";
        case RejectionMode::ambiguity_only: return "ARO";
        case RejectionMode::dual: return "DRM";
    }
    return "Base";
}

Decision decide_total(const DualRejector& rejector, const Vector& flat_input) {
    Decision out;
    if (rejector.mode == RejectionMode::none) return out;

    if (uses_novelty(rejector.mode)) {
        if (!rejector.novelty.calibrated()) {
            throw std::logic_error("decide_total: novelty rejector is not calibrated");
        }
        const double score = novelty::novelty_score(rejector.novelty, flat_input);
        out.novelty_score = score;
        if (novelty::decide_novelty(rejector.novelty, score) == 1) {
            out.decision = 1;
            return out;  // ambiguity skipped, variance_score stays absent
        }
    }
    if (uses_ambiguity(rejector.mode)) {
        if (!rejector.ambiguity.estimator.fitted()) {
            throw std::logic_error("decide_total: ambiguity rejector is not calibrated");
        }
        Vector features = flat_input;
        if (rejector.ambiguity.estimator.feature_mode() == ambiguity::FeatureMode::latent_mean) {
            features = vae::encode(rejector.novelty.vae_params, flat_input).mu;
        }
        const double score = rejector.ambiguity.estimator.predict(features);
        out.variance_score = score;
        out.decision = ambiguity::decide_ambiguity_score(rejector.ambiguity, score);
    }
    return out;
}

RiskReport evaluate(const DualRejector& rejector, const std::vector<tsio::WindowPair>& test,
                    const forecaster::Forecaster& model, const EvalOptions& options) {
    if (test.empty()) throw std::invalid_argument("evaluate: empty test set");
    if (options.lambda < 0.0) throw std::invalid_argument("evaluate: lambda must be >= 0");
    if (!model.fitted()) throw std::logic_error("evaluate: model not fitted");

    RiskReport report;
    report.lambda = options.lambda;
    report.n_windows = test.size();
    report.per_window.reserve(test.size());

    std::vector<double> all_losses;
    all_losses.reserve(test.size());
    double accepted_loss = 0.0, accepted_mae = 0.0, accepted_mse = 0.0, total_loss = 0.0;
    std::size_t accepted = 0;

    for (const auto& w : test) {
        const Matrix prediction = model.predict_window(w);
        const double loss = forecaster::window_loss(prediction, w.target, options.metric);
        const Decision d = decide_total(rejector, flatten(w.input));

        WindowOutcome outcome;
        outcome.origin_index = w.origin_index;
        outcome.decision = d.decision;
        outcome.variance_score = d.variance_score;
        outcome.novelty_score = d.novelty_score;
        if (d.decision == 0) {
            outcome.loss_if_accepted = loss;
            accepted_loss += loss;
            accepted_mae +=
                forecaster::window_loss(prediction, w.target, forecaster::ErrorMetric::absolute);
            accepted_mse +=
                forecaster::window_loss(prediction, w.target, forecaster::ErrorMetric::squared);
            ++accepted;
        } else {
            ++report.n_rejected;
        }
        total_loss += loss;
        all_losses.push_back(loss);
        report.per_window.push_back(std::move(outcome));
    }

    const auto n = static_cast<double>(test.size());
    report.epsilon = static_cast<double>(report.n_rejected) / n;
    report.l_all = total_loss / n;
    if (accepted > 0) {
        const auto a = static_cast<double>(accepted);
        report.l_accepted = accepted_loss / a;
        report.mae_accepted = accepted_mae / a;
        report.mse_accepted = accepted_mse / a;
        report.risk = (1.0 - report.epsilon) * report.l_accepted +
                      options.lambda * report.epsilon;
    } else {
        report.l_accepted = kNaN;
        report.mae_accepted = kNaN;
        report.mse_accepted = kNaN;
        report.risk = options.lambda;  // epsilon == 1
    }
    if (report.epsilon < 1.0) {
        report.bound_ideal = bound_ideal(all_losses, report.epsilon, options.lambda);
        report.bound_random = bound_random(all_losses, report.epsilon, options.lambda);
    } else {
        // Everything rejected: both reference strategies also pay lambda.
        report.bound_ideal = options.lambda;
        report.bound_random = options.lambda;
    }
    return report;
}

double bound_ideal(const std::vector<double>& losses, double epsilon, double lambda) {
    if (losses.empty()) throw std::invalid_argument("bound_ideal: empty losses");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("bound_ideal: epsilon must lie in [0,1)");
    }
    const auto n = static_cast<double>(losses.size());
    auto k = static_cast<std::size_t>(std::ceil(epsilon * n - 1e-9));
    if (k >= losses.size()) k = losses.size();  // every window dropped
    if (k == losses.size()) return lambda;

    std::vector<double> sorted = losses;
    // Descending, stable: equal losses drop in input (origin) order.
    std::stable_sort(sorted.begin(), sorted.end(), std::greater<double>{});
    const double kept_sum = std::accumulate(sorted.begin() + static_cast<std::ptrdiff_t>(k),
                                            sorted.end(), 0.0);
    const double realized = static_cast<double>(k) / n;
    const double kept_mean = kept_sum / (n - static_cast<double>(k));
    return (1.0 - realized) * kept_mean + lambda * realized;
}

double bound_random(const std::vector<double>& losses, double epsilon, double lambda) {
    if (losses.empty()) throw std::invalid_argument("bound_random: empty losses");
    if (!(epsilon >= 0.0 && epsilon < 1.0)) {
        throw std::invalid_argument("bound_random: epsilon must lie in [0,1)");
    }
    const double mean = std::accumulate(losses.begin(), losses.end(), 0.0) /
                        static_cast<double>(losses.size());
    return (1.0 - epsilon) * mean + lambda * epsilon;
}

Vector ambiguity_features(const RejectorComponents& parts, const Vector& flat_input) {
    if (parts.estimator.feature_mode() == ambiguity::FeatureMode::latent_mean) {
        return vae::encode(parts.vae_params, flat_input).mu;
    }
    return flat_input;
}

std::vector<double> variance_scores(const RejectorComponents& parts,
                                    const std::vector<tsio::WindowPair>& windows) {
    std::vector<double> scores;
    scores.reserve(windows.size());
    for (const auto& w : windows) {
        scores.push_back(parts.estimator.predict(ambiguity_features(parts, flatten(w.input))));
    }
    return scores;
}

std::vector<double> novelty_scores(const RejectorComponents& parts,
                                   const std::vector<tsio::WindowPair>& windows) {
    novelty::NoveltyRejector scorer;
    scorer.vae_params = parts.vae_params;
    scorer.summary = parts.summary;
    std::vector<double> scores;
    scores.reserve(windows.size());
    for (const auto& w : windows) {
        scores.push_back(novelty::novelty_score(scorer, flatten(w.input)));
    }
    return scores;
}

DualRejector calibrate_dual(const RejectorComponents& parts,
                            const std::vector<double>& val_variance_scores,
                            const std::vector<double>& val_novelty_scores, RejectionMode mode,
                            double target_rate) {
    if (!(target_rate >= 0.0 && target_rate < 1.0)) {
        throw std::invalid_argument("calibrate_dual: target_rate must lie in [0,1)");
    }
    DualRejector rejector;
    rejector.mode = mode;
    rejector.novelty.vae_params = parts.vae_params;
    rejector.novelty.summary = parts.summary;
    rejector.ambiguity.estimator = parts.estimator;
    rejector.ambiguity.var_threshold = kInf;
    rejector.novelty.d_threshold = kInf;

    if (mode == RejectionMode::none || target_rate == 0.0) return rejector;

    // Dual mode splits the budget evenly; single modes spend all of it.
    const double novelty_rate = mode == RejectionMode::dual ? target_rate / 2.0 : target_rate;
    const double ambiguity_rate = novelty_rate;

    if (uses_novelty(mode)) {
        rejector.novelty.d_threshold = novelty::calibrate_novelty(val_novelty_scores, novelty_rate);
        rejector.novelty.realized_val_rate =
            stats::realized_rejection_rate(val_novelty_scores, rejector.novelty.d_threshold);
    }
    if (uses_ambiguity(mode)) {
        rejector.ambiguity = ambiguity::calibrate_ambiguity_rate(
            parts.estimator, val_variance_scores, ambiguity_rate, parts.alpha);
    }
    return rejector;
}

std::vector<SweepRow> sweep(const RejectorComponents& parts,
                            const std::vector<tsio::WindowPair>& validation,
                            const std::vector<tsio::WindowPair>& test,
                            const forecaster::Forecaster& model, const EvalOptions& options,
                            const std::vector<double>& rates, RejectionMode mode) {
    if (!std::is_sorted(rates.begin(), rates.end())) {
        throw std::invalid_argument("sweep: rates must be ascending");
    }
    const auto val_var = variance_scores(parts, validation);
    const auto val_nov = novelty_scores(parts, validation);

    std::vector<SweepRow> rows;
    rows.reserve(rates.size());
    for (double rate : rates) {
        const DualRejector rejector = calibrate_dual(parts, val_var, val_nov, mode, rate);
        SweepRow row;
        row.target_rate = rate;
        row.var_threshold = rejector.ambiguity.var_threshold;
        row.d_threshold = rejector.novelty.d_threshold;
        row.report = evaluate(rejector, test, model, options);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::vector<AblationRow> ablate(const RejectorComponents& parts,
                                const std::vector<tsio::WindowPair>& validation,
                                const std::vector<tsio::WindowPair>& test,
                                const forecaster::Forecaster& model, const EvalOptions& options,
                                double target_rate) {
    const auto val_var = variance_scores(parts, validation);
    const auto val_nov = novelty_scores(parts, validation);

    const RejectionMode order[] = {RejectionMode::none, RejectionMode::novelty_only,
                                   RejectionMode::ambiguity_only, RejectionMode::dual};
    std::vector<AblationRow> rows;
    rows.reserve(4);
    for (RejectionMode mode : order) {
        const DualRejector rejector = calibrate_dual(parts, val_var, val_nov, mode, target_rate);
        AblationRow row;
        row.mode = mode;
        row.label = mode_label(mode);
        row.target_rate = mode == RejectionMode::none ? 0.0 : target_rate;
        row.var_threshold = rejector.ambiguity.var_threshold;
        row.d_threshold = rejector.novelty.d_threshold;
        row.report = evaluate(rejector, test, model, options);
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_report_csv(const RiskReport& report, const std::string& path) {
    auto out = open_out(path);
    out << "origin_index,decision,loss_if_accepted,variance_score,novelty_score\n";
    for (const auto& w : report.per_window) {
        out << w.origin_index << "," << w.decision << "," << field(w.loss_if_accepted) << ","
            << field(w.variance_score) << "," << field(w.novelty_score) << "\n";
    }
}

void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "target_rate,realized_rate,var_threshold,d_threshold,mae_accepted,mse_accepted,"
           "risk,bound_ideal,bound_random\n";
    for (const auto& row : rows) {
        out << serialize::format_double(row.target_rate) << ","
            << serialize::format_double(row.report.epsilon) << ","
            << serialize::format_double(row.var_threshold) << ","
            << serialize::format_double(row.d_threshold) << ","
            << serialize::format_double(row.report.mae_accepted) << ","
            << serialize::format_double(row.report.mse_accepted) << ","
            << serialize::format_double(row.report.risk) << ","
            << serialize::format_double(row.report.bound_ideal) << ","
            << serialize::format_double(row.report.bound_random) << "\n";
    }
}

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path) {
    auto out = open_out(path);
    out << "label,mode,target_rate,realized_rate,var_threshold,d_threshold,mae_accepted,"
           "mse_accepted,risk,bound_ideal,bound_random\n";
    for (const auto& row : rows) {
        out << row.label << "," << to_string(row.mode) << ","
            << serialize::format_double(row.target_rate) << ","
            << serialize::format_double(row.report.epsilon) << ","
            << serialize::format_double(row.var_threshold) << ","
            << serialize::format_double(row.d_threshold) << ","
            << serialize::format_double(row.report.mae_accepted) << ","
            << serialize::format_double(row.report.mse_accepted) << ","
            << serialize::format_double(row.report.risk) << ","
            << serialize::format_double(row.report.bound_ideal) << ","
            << serialize::format_double(row.report.bound_random) << "\n";
    }
}

}  // namespace tsreject::pipeline
