#include "tsreject/ambiguity.hpp"

#include <cmath>
#include <limits>

namespace tsreject::ambiguity {

FeatureMode feature_mode_from_string(const std::string& name) {
    if (name == "input") return FeatureMode::flattened_input;
    if (name == "latent") return FeatureMode::latent_mean;
    throw ConfigError("unknown feature mode '" + name + "' (expected input|latent)");
}

std::string to_string(FeatureMode mode) {
    return mode == FeatureMode::flattened_input ? "input" : "latent";
}

double ErrorVarianceEstimator::predict(const Vector& features) const {
    if (!fitted_) throw std::logic_error("error variance estimator used before fit");
    if (features.size() != weights_.size()) {
        throw std::invalid_argument("error estimator: feature length " +
                                    std::to_string(features.size()) + " != expected " +
                                    std::to_string(weights_.size()));
    }
    // Clamp the log-variance so far-out inputs cannot overflow to inf.
    const double log_var = std::clamp(weights_.dot(features) + bias_, -500.0, 500.0);
    return std::exp(log_var);
}

void ErrorVarianceEstimator::write_to(serialize::Document& doc) const {
    doc.put_vec("estimator_weights", weights_);
    doc.put_num("estimator_bias", bias_);
    doc.put_str("estimator_feature_mode", to_string(mode_));
}

ErrorVarianceEstimator ErrorVarianceEstimator::read_from(const serialize::Document& doc) {
    return {doc.get_vec("estimator_weights"), doc.get_num("estimator_bias"),
            feature_mode_from_string(doc.get_str("estimator_feature_mode"))};
}

ErrorVarianceEstimator fit_error_model(const std::vector<Vector>& features,
                                       const std::vector<double>& errors, FeatureMode mode) {
    const size_t n = features.size();
    if (n != errors.size()) {
        throw std::invalid_argument("fit_error_model: features/errors count mismatch");
    }
    if (n < 10) {
        throw std::invalid_argument("fit_error_model: need at least 10 records, got " +
                                    std::to_string(n));
    }
    const Index d = features.front().size();
    bool any_difference = false;
    for (const Vector& f : features) {
        if (f.size() != d) throw std::invalid_argument("fit_error_model: ragged features");
        if (!any_difference && (f - features.front()).cwiseAbs().maxCoeff() > 0.0) {
            any_difference = true;
        }
    }
    if (!any_difference) {
        throw DataError("fit_error_model: degenerate features (all records identical)");
    }

    Matrix x(static_cast<Index>(n), d + 1);
    Vector y(static_cast<Index>(n));
    for (size_t i = 0; i < n; ++i) {
        x.row(static_cast<Index>(i)).head(d) = features[i].transpose();
        x(static_cast<Index>(i), d) = 1.0;
        y(static_cast<Index>(i)) = std::log(errors[i] + ErrorVarianceEstimator::kErrorFloor);
    }

    // Tiny ridge keeps the normal equations well posed under collinear
    // features without visibly biasing the fit.
    Matrix gram = x.transpose() * x;
    const double jitter = 1e-8 * gram.trace() / static_cast<double>(gram.rows());
    gram.diagonal().array() += jitter;
    const Vector solution = Eigen::LDLT<Matrix>(gram).solve(x.transpose() * y);
    if (!solution.allFinite()) {
        throw NumericError("fit_error_model: least-squares solve produced non-finite weights");
    }
    return {solution.head(d), solution(d), mode};
}

ErrorVarianceEstimator fit_error_model(const std::vector<forecaster::ResidualRecord>& records,
                                       FeatureMode mode) {
    std::vector<Vector> features;
    std::vector<double> errors;
    features.reserve(records.size());
    errors.reserve(records.size());
    for (const auto& rec : records) {
        features.push_back(rec.features);
        errors.push_back(rec.error);
    }
    return fit_error_model(features, errors, mode);
}

int decide_ambiguity(const AmbiguityRejector& rejector, const Vector& window_features) {
    return decide_ambiguity_score(rejector, rejector.estimator.predict(window_features));
}

int decide_ambiguity_score(const AmbiguityRejector& rejector, double variance_score) {
    return variance_score > rejector.var_threshold ? 1 : 0;
}

AmbiguityRejector calibrate_ambiguity_rate(ErrorVarianceEstimator estimator,
                                           const std::vector<double>& val_scores,
                                           double target_rate, double alpha) {
    AmbiguityRejector rejector;
    rejector.estimator = std::move(estimator);
    rejector.calibration = CalibrationMode::rate;
    rejector.var_threshold = stats::rejection_threshold(val_scores, target_rate);
    rejector.spec.alpha = alpha;
    rejector.spec.dof = std::max<long>(1, static_cast<long>(val_scores.size()) - 1);
    // Back out the width so threshold == (W / 2t)^2 holds exactly.
    rejector.interval_width = stats::width_from_threshold(rejector.var_threshold, rejector.spec);
    rejector.realized_val_rate =
        stats::realized_rejection_rate(val_scores, rejector.var_threshold);
    return rejector;
}

AmbiguityRejector calibrate_ambiguity_interval(ErrorVarianceEstimator estimator,
                                               double interval_width,
                                               const stats::ConfidenceSpec& spec) {
    AmbiguityRejector rejector;
    rejector.estimator = std::move(estimator);
    rejector.calibration = CalibrationMode::interval;
    rejector.spec = spec;
    rejector.interval_width = interval_width;
    rejector.var_threshold = stats::variance_threshold(interval_width, spec);
    rejector.realized_val_rate = std::numeric_limits<double>::quiet_NaN();
    return rejector;
}

double sequence_rejection_loss(const Matrix& prediction, const Matrix& truth, int decision,
                               double cost, forecaster::ErrorMetric metric) {
    if (cost < 0.0) throw std::invalid_argument("sequence_rejection_loss: cost must be >= 0");
    if (decision != 0 && decision != 1) {
        throw std::invalid_argument("sequence_rejection_loss: decision must be 0 or 1");
    }
    if (decision == 1) return cost;
    return forecaster::window_loss(prediction, truth, metric);
}

void write_rejector(const AmbiguityRejector& rejector, serialize::Document& doc) {
    rejector.estimator.write_to(doc);
    doc.put_num("var_threshold", rejector.var_threshold);
    doc.put_num("alpha", rejector.spec.alpha);
    doc.put_int("dof", rejector.spec.dof);
    doc.put_num("interval_width", rejector.interval_width);
    doc.put_str("calibration",
                rejector.calibration == CalibrationMode::rate ? "rate" : "interval");
    doc.put_num("ambiguity_realized_val_rate", rejector.realized_val_rate);
}

AmbiguityRejector read_rejector(const serialize::Document& doc) {
    AmbiguityRejector rejector;
    rejector.estimator = ErrorVarianceEstimator::read_from(doc);
    rejector.var_threshold = doc.get_num("var_threshold");
    rejector.spec.alpha = doc.get_num("alpha");
    rejector.spec.dof = doc.get_int("dof");
    rejector.interval_width = doc.get_num("interval_width");
    rejector.calibration = doc.get_str("calibration") == "interval" ? CalibrationMode::interval
                                                                    : CalibrationMode::rate;
    rejector.realized_val_rate = doc.get_num("ambiguity_realized_val_rate");
    return rejector;
}

}  // namespace tsreject::ambiguity
