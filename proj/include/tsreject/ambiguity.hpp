#ifndef TSREJECT_AMBIGUITY_HPP
#define TSREJECT_AMBIGUITY_HPP

#include <string>
#include <vector>

#include "tsreject/common.hpp"
#include "tsreject/forecaster.hpp"
#include "tsreject/serialize.hpp"
#include "tsreject/stats.hpp"

namespace tsreject::ambiguity {

/// Feature source for the error-variance regressor.
enum class FeatureMode { flattened_input, latent_mean };

FeatureMode feature_mode_from_string(const std::string& name);
std::string to_string(FeatureMode mode);

/**
 * Test-time estimate of the prediction-error variance: a linear model of
 * log(error + eps_floor) against window features, exponentiated at
 * inference. The exp keeps every estimate strictly positive.
 */
class ErrorVarianceEstimator {
public:
    ErrorVarianceEstimator() = default;
    ErrorVarianceEstimator(Vector weights, double bias, FeatureMode mode)
        : weights_(std::move(weights)), bias_(bias), mode_(mode), fitted_(true) {}

    double predict(const Vector& features) const;
    FeatureMode feature_mode() const { return mode_; }
    bool fitted() const { return fitted_; }
    Index feature_dim() const { return weights_.size(); }

    void write_to(serialize::Document& doc) const;
    static ErrorVarianceEstimator read_from(const serialize::Document& doc);

    static constexpr double kErrorFloor = 1e-8;  // inside the log, avoids -inf

private:
    Vector weights_;
    double bias_ = 0.0;
    FeatureMode mode_ = FeatureMode::flattened_input;
    bool fitted_ = false;
};

/**
 * Least-squares fit of log(error + floor) against the given features.
 * Requires at least 10 records (validation residuals, never training ones)
 * and non-degenerate features.
 */
ErrorVarianceEstimator fit_error_model(const std::vector<Vector>& features,
                                       const std::vector<double>& errors, FeatureMode mode);

/// Convenience overload over residual records (flattened-input features).
ErrorVarianceEstimator fit_error_model(const std::vector<forecaster::ResidualRecord>& records,
                                       FeatureMode mode = FeatureMode::flattened_input);

/// How the variance threshold was chosen.
enum class CalibrationMode { rate, interval };

/**
 * Ambiguity rejector: reject when the estimated error variance strictly
 * exceeds var_threshold. The threshold and the t-interval width W satisfy
 * var_threshold = (W / (2 t_{alpha/2,dof}))^2 exactly in either calibration
 * mode, so the two parameterizations stay interconvertible.
 */
struct AmbiguityRejector {
    ErrorVarianceEstimator estimator;
    double var_threshold = std::numeric_limits<double>::infinity();
    stats::ConfidenceSpec spec;
    double interval_width = 0.0;
    CalibrationMode calibration = CalibrationMode::rate;
    double realized_val_rate = 0.0;

    bool calibrated() const { return std::isfinite(var_threshold) || estimator.fitted(); }
};

/// 1 iff the estimated variance strictly exceeds the threshold
/// (equality accepts).
int decide_ambiguity(const AmbiguityRejector& rejector, const Vector& window_features);

/// Decision from a precomputed variance score.
int decide_ambiguity_score(const AmbiguityRejector& rejector, double variance_score);

/**
 * Rate mode: threshold = empirical (1 - target_rate) quantile of the
 * validation variance scores; the equivalent interval width W is derived
 * and stored. Interval mode: threshold = (W / (2 t))^2 from the given spec
 * and width.
 */
AmbiguityRejector calibrate_ambiguity_rate(ErrorVarianceEstimator estimator,
                                           const std::vector<double>& val_scores,
                                           double target_rate, double alpha = 0.05);

AmbiguityRejector calibrate_ambiguity_interval(ErrorVarianceEstimator estimator,
                                               double interval_width,
                                               const stats::ConfidenceSpec& spec);

/**
 * Rejection loss for one window: the fixed cost c when rejected, the
 * window loss under the chosen metric when accepted.
 */
double sequence_rejection_loss(const Matrix& prediction, const Matrix& truth, int decision,
                               double cost,
                               forecaster::ErrorMetric metric = forecaster::ErrorMetric::squared);

void write_rejector(const AmbiguityRejector& rejector, serialize::Document& doc);
AmbiguityRejector read_rejector(const serialize::Document& doc);

}  // namespace tsreject::ambiguity

#endif  // TSREJECT_AMBIGUITY_HPP
