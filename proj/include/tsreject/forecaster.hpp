#ifndef TSREJECT_FORECASTER_HPP
#define TSREJECT_FORECASTER_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "tsreject/common.hpp"
#include "tsreject/serialize.hpp"
#include "tsreject/tsio.hpp"

namespace tsreject::forecaster {

/// Per-window deviation aggregation for residuals and window losses.
enum class ErrorMetric { squared, absolute };

ErrorMetric error_metric_from_string(const std::string& name);
std::string to_string(ErrorMetric metric);

/// Mean over all target entries of the chosen deviation between prediction
/// and truth. Shapes must agree.
double window_loss(const Matrix& prediction, const Matrix& truth, ErrorMetric metric);

/**
 * Point forecaster contract: fit on window pairs, then map any L x N input
 * to an S x N prediction. predict is deterministic after fit for a fixed
 * seed, and fitted models are immutable (predict is const and thread-safe).
 */
class Forecaster {
public:
    virtual ~Forecaster() = default;

    virtual void fit(const std::vector<tsio::WindowPair>& train, std::uint64_t seed) = 0;
    virtual Matrix predict(const Matrix& input) const = 0;

    /// Predict for a known window. The default forwards to predict(input);
    /// table-backed forecasters override this to look up by origin_index.
    virtual Matrix predict_window(const tsio::WindowPair& window) const {
        return predict(window.input);
    }

    virtual std::string kind() const = 0;
    virtual serialize::Document to_document() const = 0;

    Index lookback() const { return lookback_; }
    Index horizon() const { return horizon_; }
    Index variables() const { return variables_; }
    bool fitted() const { return fitted_; }

protected:
    void set_shape(Index lookback, Index horizon, Index variables) {
        lookback_ = lookback;
        horizon_ = horizon;
        variables_ = variables;
        fitted_ = true;
    }
    void check_input(const Matrix& input) const;

    Index lookback_ = 0;
    Index horizon_ = 0;
    Index variables_ = 0;
    bool fitted_ = false;
};

/**
 * Linear autoregressive forecaster: flattened input window (plus bias)
 * mapped to the flattened target by ridge-regularized least squares. The
 * bias row is not penalized, so lambda -> infinity shrinks the prediction
 * to the train-target mean.
 */
class RidgeForecaster final : public Forecaster {
public:
    explicit RidgeForecaster(double ridge_lambda = 1e-3);

    void fit(const std::vector<tsio::WindowPair>& train, std::uint64_t seed) override;
    Matrix predict(const Matrix& input) const override;
    std::string kind() const override { return "ridge"; }
    serialize::Document to_document() const override;
    static std::unique_ptr<RidgeForecaster> from_document(const serialize::Document& doc);

    const Matrix& weights() const { return weights_; }
    double ridge_lambda() const { return ridge_lambda_; }

private:
    double ridge_lambda_;
    Matrix weights_;  // (L*N + 1) x (S*N), last row is the bias
};

struct MlpHyperparams {
    Index hidden_dim = 64;
    int epochs = 200;
    double learning_rate = 1e-3;
};

/**
 * Small feed-forward forecaster: flattened input -> tanh hidden layer ->
 * flattened output, trained per-sample with Adam. Seeded and deterministic.
 */
class MlpForecaster final : public Forecaster {
public:
    explicit MlpForecaster(MlpHyperparams hp = {});

    void fit(const std::vector<tsio::WindowPair>& train, std::uint64_t seed) override;
    Matrix predict(const Matrix& input) const override;
    std::string kind() const override { return "mlp"; }
    serialize::Document to_document() const override;
    static std::unique_ptr<MlpForecaster> from_document(const serialize::Document& doc);

    /// Per-epoch mean train losses; entry 0 is the pre-training loss.
    const std::vector<double>& training_log() const { return training_log_; }

    /// Sum-of-squares loss and analytic parameter gradients for one sample;
    /// layout of the gradient vector matches flat_parameters().
    double loss_and_gradient(const Vector& input, const Vector& target, Vector& grad) const;
    Vector flat_parameters() const;
    void set_flat_parameters(const Vector& params);

private:
    void init_parameters(Index in_dim, Index out_dim, std::uint64_t seed);

    MlpHyperparams hp_;
    Matrix w1_, w2_;
    Vector b1_, b2_;
    std::vector<double> training_log_;
};

/**
 * Forecaster backed by a prediction file: CSV rows of
 * origin_index,v1,...,v_{S*N} (flattened S x N predictions). Supports only
 * predict_window on known origins; predict on a bare matrix is unavailable.
 */
class PredictionTableForecaster final : public Forecaster {
public:
    PredictionTableForecaster(const std::string& csv_path, Index horizon, Index variables);

    void fit(const std::vector<tsio::WindowPair>&, std::uint64_t) override {}
    Matrix predict(const Matrix& input) const override;
    Matrix predict_window(const tsio::WindowPair& window) const override;
    std::string kind() const override { return "prediction_table"; }
    serialize::Document to_document() const override;

    size_t size() const { return table_.size(); }

private:
    std::map<Index, Vector> table_;
};

/// Per-window residual: scalar error, the flattened input features, and the
/// window's position in the source series.
struct ResidualRecord {
    double error = 0.0;
    Vector features;
    Index origin_index = 0;
};

/// One record per window; error is the mean over all S*N target entries of
/// the chosen deviation.
std::vector<ResidualRecord> collect_residuals(const Forecaster& model,
                                              const std::vector<tsio::WindowPair>& data,
                                              ErrorMetric metric);

/// Instantiate a forecaster by kind name ("ridge" or "mlp").
std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, double ridge_lambda,
                                            const MlpHyperparams& mlp);

/// Load a serialized forecaster, dispatching on its kind field.
std::unique_ptr<Forecaster> load_forecaster(const std::string& path);

}  // namespace tsreject::forecaster

#endif  // TSREJECT_FORECASTER_HPP
