#include "tsreject/forecaster.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace tsreject::forecaster {

namespace {

void check_train_set(const std::vector<tsio::WindowPair>& train) {
    if (train.empty()) throw std::invalid_argument("fit: empty training set");
    const Index L = train.front().input.rows();
    const Index S = train.front().target.rows();
    const Index N = train.front().input.cols();
    for (const auto& w : train) {
        if (w.input.rows() != L || w.input.cols() != N || w.target.rows() != S ||
            w.target.cols() != N) {
            throw std::invalid_argument("fit: inconsistent window shapes in training set");
        }
    }
}

template <typename T>
struct AdamState {
    T m, v;
    explicit AdamState(const T& shape)
        : m(T::Zero(shape.rows(), shape.cols())), v(T::Zero(shape.rows(), shape.cols())) {}
};

template <typename T, typename Grad>
void adam_update(T& param, AdamState<T>& state, const Grad& grad, double lr, long step) {
    constexpr double beta1 = 0.9;
    constexpr double beta2 = 0.999;
    constexpr double eps = 1e-8;
    state.m = beta1 * state.m + (1.0 - beta1) * grad;
    state.v = beta2 * state.v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    param.array() -=
        lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + eps);
}

}  // namespace

ErrorMetric error_metric_from_string(const std::string& name) {
    if (name == "squared") return ErrorMetric::squared;
    if (name == "absolute") return ErrorMetric::absolute;
    throw ConfigError("unknown error metric '" + name + "' (expected squared|absolute)");
}

std::string to_string(ErrorMetric metric) {
    return metric == ErrorMetric::squared ? "squared" : "absolute";
}

double window_loss(const Matrix& prediction, const Matrix& truth, ErrorMetric metric) {
    if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols()) {
        throw std::invalid_argument("window_loss: prediction shape " +
                                    std::to_string(prediction.rows()) + "x" +
                                    std::to_string(prediction.cols()) + " != truth shape " +
                                    std::to_string(truth.rows()) + "x" +
                                    std::to_string(truth.cols()));
    }
    const auto diff = (prediction - truth).array();
    const double total = metric == ErrorMetric::squared ? diff.square().sum() : diff.abs().sum();
    return total / static_cast<double>(prediction.size());
}

void Forecaster::check_input(const Matrix& input) const {
    if (!fitted_) throw std::logic_error("forecaster used before fit");
    if (input.rows() != lookback_ || input.cols() != variables_) {
        throw std::invalid_argument("predict: input shape " + std::to_string(input.rows()) + "x" +
                                    std::to_string(input.cols()) + " != expected " +
                                    std::to_string(lookback_) + "x" + std::to_string(variables_));
    }
}

// ---------------------------------------------------------------------------
// RidgeForecaster

RidgeForecaster::RidgeForecaster(double ridge_lambda) : ridge_lambda_(ridge_lambda) {
    if (ridge_lambda < 0.0) {
        throw std::invalid_argument("ridge_lambda must be >= 0");
    }
}

void RidgeForecaster::fit(const std::vector<tsio::WindowPair>& train, std::uint64_t) {
    check_train_set(train);
    const Index L = train.front().input.rows();
    const Index S = train.front().target.rows();
    const Index N = train.front().input.cols();
    const Index p = L * N;
    const Index q = S * N;
    const auto n = static_cast<Index>(train.size());

    Matrix x(n, p + 1);
    Matrix y(n, q);
    for (Index i = 0; i < n; ++i) {
        x.row(i).head(p) = flatten(train[static_cast<size_t>(i)].input).transpose();
        x(i, p) = 1.0;  // bias column
        y.row(i) = flatten(train[static_cast<size_t>(i)].target).transpose();
    }

    Matrix gram = x.transpose() * x;
    // Penalize the weights only; the bias row stays free so the lambda -> inf
    // limit recovers the train-target mean.
    for (Index j = 0; j < p; ++j) gram(j, j) += ridge_lambda_;

    Eigen::LLT<Matrix> llt(gram);
    if (llt.info() != Eigen::Success) {
        throw NumericError("ridge fit: normal equations are singular (ridge_lambda = " +
                           serialize::format_double(ridge_lambda_) + ")");
    }
    weights_ = llt.solve(x.transpose() * y);
    if (!all_finite(weights_)) {
        throw NumericError("ridge fit produced non-finite weights");
    }
    set_shape(L, S, N);
}

Matrix RidgeForecaster::predict(const Matrix& input) const {
    check_input(input);
    Vector features(lookback_ * variables_ + 1);
    features.head(lookback_ * variables_) = flatten(input);
    features(lookback_ * variables_) = 1.0;
    const Vector out = weights_.transpose() * features;
    return unflatten(out, horizon_, variables_);
}

serialize::Document RidgeForecaster::to_document() const {
    serialize::Document doc;
    doc.put_str("kind", "ridge");
    doc.put_int("lookback", lookback_);
    doc.put_int("horizon", horizon_);
    doc.put_int("variables", variables_);
    doc.put_num("ridge_lambda", ridge_lambda_);
    doc.put_mat("weights", weights_);
    return doc;
}

std::unique_ptr<RidgeForecaster> RidgeForecaster::from_document(const serialize::Document& doc) {
    auto model = std::make_unique<RidgeForecaster>(doc.get_num("ridge_lambda"));
    model->weights_ = doc.get_mat("weights");
    model->set_shape(doc.get_int("lookback"), doc.get_int("horizon"), doc.get_int("variables"));
    return model;
}

// ---------------------------------------------------------------------------
// MlpForecaster

MlpForecaster::MlpForecaster(MlpHyperparams hp) : hp_(hp) {
    if (hp_.hidden_dim < 1) throw std::invalid_argument("mlp hidden_dim must be >= 1");
    if (hp_.epochs < 0) throw std::invalid_argument("mlp epochs must be >= 0");
    if (!(hp_.learning_rate > 0.0)) throw std::invalid_argument("mlp learning_rate must be > 0");
}

void MlpForecaster::init_parameters(Index in_dim, Index out_dim, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(in_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hp_.hidden_dim));
    w1_.resize(hp_.hidden_dim, in_dim);
    for (Index r = 0; r < w1_.rows(); ++r)
        for (Index c = 0; c < w1_.cols(); ++c) w1_(r, c) = s1 * gauss(rng);
    b1_ = Vector::Zero(hp_.hidden_dim);
    w2_.resize(out_dim, hp_.hidden_dim);
    for (Index r = 0; r < w2_.rows(); ++r)
        for (Index c = 0; c < w2_.cols(); ++c) w2_(r, c) = s2 * gauss(rng);
    b2_ = Vector::Zero(out_dim);
}

double MlpForecaster::loss_and_gradient(const Vector& input, const Vector& target,
                                        Vector& grad) const {
    const Vector h = (w1_ * input + b1_).array().tanh();
    const Vector out = w2_ * h + b2_;
    const Vector r = out - target;
    const double loss = 0.5 * r.squaredNorm();

    const Matrix dw2 = r * h.transpose();
    const Vector db2 = r;
    const Vector dh = w2_.transpose() * r;
    const Vector dpre = dh.array() * (1.0 - h.array().square());
    const Matrix dw1 = dpre * input.transpose();
    const Vector db1 = dpre;

    grad.resize(w1_.size() + b1_.size() + w2_.size() + b2_.size());
    Index k = 0;
    for (Index r_ = 0; r_ < dw1.rows(); ++r_)
        for (Index c = 0; c < dw1.cols(); ++c) grad(k++) = dw1(r_, c);
    for (Index i = 0; i < db1.size(); ++i) grad(k++) = db1(i);
    for (Index r_ = 0; r_ < dw2.rows(); ++r_)
        for (Index c = 0; c < dw2.cols(); ++c) grad(k++) = dw2(r_, c);
    for (Index i = 0; i < db2.size(); ++i) grad(k++) = db2(i);
    return loss;
}

Vector MlpForecaster::flat_parameters() const {
    Vector flat(w1_.size() + b1_.size() + w2_.size() + b2_.size());
    Index k = 0;
    for (Index r = 0; r < w1_.rows(); ++r)
        for (Index c = 0; c < w1_.cols(); ++c) flat(k++) = w1_(r, c);
    for (Index i = 0; i < b1_.size(); ++i) flat(k++) = b1_(i);
    for (Index r = 0; r < w2_.rows(); ++r)
        for (Index c = 0; c < w2_.cols(); ++c) flat(k++) = w2_(r, c);
    for (Index i = 0; i < b2_.size(); ++i) flat(k++) = b2_(i);
    return flat;
}

void MlpForecaster::set_flat_parameters(const Vector& params) {
    if (params.size() != w1_.size() + b1_.size() + w2_.size() + b2_.size()) {
        throw std::invalid_argument("set_flat_parameters: size mismatch");
    }
    Index k = 0;
    for (Index r = 0; r < w1_.rows(); ++r)
        for (Index c = 0; c < w1_.cols(); ++c) w1_(r, c) = params(k++);
    for (Index i = 0; i < b1_.size(); ++i) b1_(i) = params(k++);
    for (Index r = 0; r < w2_.rows(); ++r)
        for (Index c = 0; c < w2_.cols(); ++c) w2_(r, c) = params(k++);
    for (Index i = 0; i < b2_.size(); ++i) b2_(i) = params(k++);
}

void MlpForecaster::fit(const std::vector<tsio::WindowPair>& train, std::uint64_t seed) {
    check_train_set(train);
    const Index L = train.front().input.rows();
    const Index S = train.front().target.rows();
    const Index N = train.front().input.cols();
    init_parameters(L * N, S * N, seed);
    set_shape(L, S, N);

    std::vector<Vector> inputs, targets;
    inputs.reserve(train.size());
    targets.reserve(train.size());
    for (const auto& w : train) {
        inputs.push_back(flatten(w.input));
        targets.push_back(flatten(w.target));
    }

    auto mean_loss = [&] {
        double total = 0.0;
        for (size_t i = 0; i < inputs.size(); ++i) {
            const Vector h = (w1_ * inputs[i] + b1_).array().tanh();
            total += 0.5 * (w2_ * h + b2_ - targets[i]).squaredNorm();
        }
        return total / static_cast<double>(inputs.size());
    };

    training_log_.clear();
    training_log_.push_back(mean_loss());

    AdamState<Matrix> aw1(w1_), aw2(w2_);
    AdamState<Vector> ab1(b1_), ab2(b2_);
    std::mt19937_64 order_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::vector<size_t> order(inputs.size());
    std::iota(order.begin(), order.end(), size_t{0});

    long step = 0;
    for (int epoch = 1; epoch <= hp_.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        for (size_t pos = 0; pos < order.size(); ++pos) {
            const size_t i = order[pos];
            const Vector& x = inputs[i];
            const Vector h = (w1_ * x + b1_).array().tanh();
            const Vector r = w2_ * h + b2_ - targets[i];
            const double loss = 0.5 * r.squaredNorm();
            if (!std::isfinite(loss)) {
                throw NumericError("mlp training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", step " + std::to_string(pos));
            }
            const Vector dpre = (w2_.transpose() * r).array() * (1.0 - h.array().square());
            ++step;
            adam_update(w2_, aw2, r * h.transpose(), hp_.learning_rate, step);
            adam_update(b2_, ab2, r, hp_.learning_rate, step);
            adam_update(w1_, aw1, dpre * x.transpose(), hp_.learning_rate, step);
            adam_update(b1_, ab1, dpre, hp_.learning_rate, step);
        }
        training_log_.push_back(mean_loss());
    }
}

Matrix MlpForecaster::predict(const Matrix& input) const {
    check_input(input);
    const Vector h = (w1_ * flatten(input) + b1_).array().tanh();
    return unflatten(w2_ * h + b2_, horizon_, variables_);
}

serialize::Document MlpForecaster::to_document() const {
    serialize::Document doc;
    doc.put_str("kind", "mlp");
    doc.put_int("lookback", lookback_);
    doc.put_int("horizon", horizon_);
    doc.put_int("variables", variables_);
    doc.put_int("hidden_dim", hp_.hidden_dim);
    doc.put_int("epochs", hp_.epochs);
    doc.put_num("learning_rate", hp_.learning_rate);
    doc.put_mat("w1", w1_);
    doc.put_vec("b1", b1_);
    doc.put_mat("w2", w2_);
    doc.put_vec("b2", b2_);
    return doc;
}

std::unique_ptr<MlpForecaster> MlpForecaster::from_document(const serialize::Document& doc) {
    MlpHyperparams hp;
    hp.hidden_dim = doc.get_int("hidden_dim");
    hp.epochs = static_cast<int>(doc.get_int("epochs"));
    hp.learning_rate = doc.get_num("learning_rate");
    auto model = std::make_unique<MlpForecaster>(hp);
    model->w1_ = doc.get_mat("w1");
    model->b1_ = doc.get_vec("b1");
    model->w2_ = doc.get_mat("w2");
    model->b2_ = doc.get_vec("b2");
    model->set_shape(doc.get_int("lookback"), doc.get_int("horizon"), doc.get_int("variables"));
    return model;
}

// ---------------------------------------------------------------------------
// PredictionTableForecaster

PredictionTableForecaster::PredictionTableForecaster(const std::string& csv_path, Index horizon,
                                                     Index variables) {
    std::ifstream file(csv_path);
    if (!file) throw DataError("cannot open prediction file: " + csv_path);
    const Index q = horizon * variables;
    std::string line;
    size_t row = 0;
    while (std::getline(file, line)) {
        ++row;
        if (line.empty() || line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> fields;
        while (std::getline(ss, cell, ',')) fields.push_back(std::stod(cell));
        if (static_cast<Index>(fields.size()) != q + 1) {
            throw DataError("prediction file row " + std::to_string(row) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(q + 1));
        }
        const auto origin = static_cast<Index>(fields[0]);
        Vector flat(q);
        for (Index i = 0; i < q; ++i) flat(i) = fields[static_cast<size_t>(i) + 1];
        table_[origin] = std::move(flat);
    }
    if (table_.empty()) throw DataError("prediction file is empty: " + csv_path);
    set_shape(0, horizon, variables);
}

Matrix PredictionTableForecaster::predict(const Matrix&) const {
    throw std::logic_error("prediction-table forecaster can only predict known window origins");
}

Matrix PredictionTableForecaster::predict_window(const tsio::WindowPair& window) const {
    const auto it = table_.find(window.origin_index);
    if (it == table_.end()) {
        throw DataError("prediction file has no row for window origin " +
                        std::to_string(window.origin_index));
    }
    return unflatten(it->second, horizon_, variables_);
}

serialize::Document PredictionTableForecaster::to_document() const {
    serialize::Document doc;
    doc.put_str("kind", "prediction_table");
    doc.put_int("horizon", horizon_);
    doc.put_int("variables", variables_);
    Matrix rows(static_cast<Index>(table_.size()), horizon_ * variables_ + 1);
    Index r = 0;
    for (const auto& [origin, flat] : table_) {
        rows(r, 0) = static_cast<double>(origin);
        rows.row(r).tail(flat.size()) = flat.transpose();
        ++r;
    }
    doc.put_mat("table", rows);
    return doc;
}

// ---------------------------------------------------------------------------

std::vector<ResidualRecord> collect_residuals(const Forecaster& model,
                                              const std::vector<tsio::WindowPair>& data,
                                              ErrorMetric metric) {
    if (!model.fitted()) throw std::logic_error("collect_residuals: model not fitted");
    std::vector<ResidualRecord> records;
    records.reserve(data.size());
    for (const auto& w : data) {
        ResidualRecord rec;
        rec.error = window_loss(model.predict_window(w), w.target, metric);
        rec.features = flatten(w.input);
        rec.origin_index = w.origin_index;
        records.push_back(std::move(rec));
    }
    return records;
}

std::unique_ptr<Forecaster> make_forecaster(const std::string& kind, double ridge_lambda,
                                            const MlpHyperparams& mlp) {
    if (kind == "ridge") return std::make_unique<RidgeForecaster>(ridge_lambda);
    if (kind == "mlp") return std::make_unique<MlpForecaster>(mlp);
    throw ConfigError("unknown forecaster kind '" + kind + "' (expected ridge|mlp)");
}

std::unique_ptr<Forecaster> load_forecaster(const std::string& path) {
    const auto doc = serialize::Document::load(path);
    const std::string& kind = doc.get_str("kind");
    if (kind == "ridge") return RidgeForecaster::from_document(doc);
    if (kind == "mlp") return MlpForecaster::from_document(doc);
    throw DataError("model file " + path + " has unsupported kind '" + kind + "'");
}

}  // namespace tsreject::forecaster
