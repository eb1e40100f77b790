#ifndef TSREJECT_PIPELINE_HPP
#define TSREJECT_PIPELINE_HPP

#include <optional>
#include <string>
#include <vector>

#include "tsreject/ambiguity.hpp"
#include "tsreject/common.hpp"
#include "tsreject/forecaster.hpp"
#include "tsreject/novelty.hpp"
#include "tsreject/tsio.hpp"
#include "tsreject/vae.hpp"

namespace tsreject::pipeline {

enum class RejectionMode { dual, ambiguity_only, novelty_only, none };

RejectionMode mode_from_string(const std::string& name);
std::string to_string(RejectionMode mode);

/// Short label used in ablation tables.
std::string mode_label(RejectionMode mode);

/**
 * Both rejectors plus the mode gating which of them may fire. Novelty is
 * checked first; a window it rejects never reaches the ambiguity check.
 */
struct DualRejector {
    ambiguity::AmbiguityRejector ambiguity;
    novelty::NoveltyRejector novelty;
    RejectionMode mode = RejectionMode::dual;
};

/// Per-window outcome. Scores are absent when the mode disables the
/// sub-rejector or the novelty short-circuit skipped the variance estimate.
struct Decision {
    int decision = 0;
    std::optional<double> novelty_score;
    std::optional<double> variance_score;
};

/// Apply the total rejection rule to one flattened input window.
Decision decide_total(const DualRejector& rejector, const Vector& flat_input);

struct WindowOutcome {
    Index origin_index = 0;
    int decision = 0;
    std::optional<double> loss_if_accepted;
    std::optional<double> variance_score;
    std::optional<double> novelty_score;
};

/**
 * Empirical risk of a rejector on a test set: accepted-set losses, the
 * rejection rate, risk = (1-epsilon)*L_accepted + lambda*epsilon, and the
 * ideal/random reference bounds at the realized rate.
 */
struct RiskReport {
    double epsilon = 0.0;
    double l_accepted = 0.0;  // NaN when every window is rejected
    double l_all = 0.0;
    double risk = 0.0;
    double lambda = 0.0;
    double mae_accepted = 0.0;
    double mse_accepted = 0.0;
    double bound_ideal = 0.0;
    double bound_random = 0.0;
    std::size_t n_windows = 0;
    std::size_t n_rejected = 0;
    std::vector<WindowOutcome> per_window;
};

struct EvalOptions {
    double lambda = 0.0;
    forecaster::ErrorMetric metric = forecaster::ErrorMetric::squared;
};

RiskReport evaluate(const DualRejector& rejector, const std::vector<tsio::WindowPair>& test,
                    const forecaster::Forecaster& model, const EvalOptions& options);

/**
 * Risk of the ideal strategy at rate epsilon: drop the ceil(epsilon*n)
 * highest losses (ties broken by position, deterministically) and price the
 * rest, (1 - eh)*mean(kept) + lambda*eh with eh the realized drop fraction.
 */
double bound_ideal(const std::vector<double>& losses, double epsilon, double lambda);

/// Expected risk of uniformly random rejection at rate epsilon:
/// (1 - epsilon)*mean(losses) + lambda*epsilon. Closed form, no sampling.
double bound_random(const std::vector<double>& losses, double epsilon, double lambda);

/**
 * Everything needed to (re)calibrate rejectors at any target rate:
 * the fitted error estimator, the VAE, and the latent training summary.
 */
struct RejectorComponents {
    ambiguity::ErrorVarianceEstimator estimator;
    vae::VaeParams vae_params;
    stats::GaussianSummary summary;
    double alpha = 0.05;
};

/// Ambiguity features for one flattened input window, per estimator mode.
Vector ambiguity_features(const RejectorComponents& parts, const Vector& flat_input);

/// Estimated error variances for a window list (calibration inputs).
std::vector<double> variance_scores(const RejectorComponents& parts,
                                    const std::vector<tsio::WindowPair>& windows);

/// Mahalanobis novelty scores for a window list (calibration inputs).
std::vector<double> novelty_scores(const RejectorComponents& parts,
                                   const std::vector<tsio::WindowPair>& windows);

/**
 * Build a DualRejector calibrated to a combined target rate. In dual mode
 * the budget is split evenly: each sub-rejector is calibrated to
 * target_rate / 2 on the validation scores; single modes spend the whole
 * budget on the active rejector. A target rate of 0 disables rejection
 * outright so the result matches mode none exactly.
 */
DualRejector calibrate_dual(const RejectorComponents& parts,
                            const std::vector<double>& val_variance_scores,
                            const std::vector<double>& val_novelty_scores, RejectionMode mode,
                            double target_rate);

struct SweepRow {
    double target_rate = 0.0;
    double var_threshold = 0.0;
    double d_threshold = 0.0;
    RiskReport report;
};

/**
 * Re-calibrate at each target rate on validation data, evaluate on test,
 * one row per rate. Rates must be ascending, each in [0,1). Every row
 * carries the random-rejection reference at its realized rate.
 */
std::vector<SweepRow> sweep(const RejectorComponents& parts,
                            const std::vector<tsio::WindowPair>& validation,
                            const std::vector<tsio::WindowPair>& test,
                            const forecaster::Forecaster& model, const EvalOptions& options,
                            const std::vector<double>& rates,
                            RejectionMode mode = RejectionMode::dual);

struct AblationRow {
    RejectionMode mode = RejectionMode::none;
    std::string label;
    double target_rate = 0.0;
    double var_threshold = 0.0;
    double d_threshold = 0.0;
    RiskReport report;
};

/// Run all four modes (Base, NRO, ARO, DRM) at the same target rate.
std::vector<AblationRow> ablate(const RejectorComponents& parts,
                                const std::vector<tsio::WindowPair>& validation,
                                const std::vector<tsio::WindowPair>& test,
                                const forecaster::Forecaster& model, const EvalOptions& options,
                                double target_rate);

/// Per-window rows: origin_index, decision, loss_if_accepted, variance
/// score, novelty score. Absent values are empty fields.
void write_report_csv(const RiskReport& report, const std::string& path);

/// Table-3-shaped CSV: one row per sweep rate.
void write_sweep_csv(const std::vector<SweepRow>& rows, const std::string& path);

void write_ablation_csv(const std::vector<AblationRow>& rows, const std::string& path);

}  // namespace tsreject::pipeline

#endif  // TSREJECT_PIPELINE_HPP
