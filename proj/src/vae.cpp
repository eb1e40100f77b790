#include "tsreject/vae.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace tsreject::vae {

namespace {

void fill_gaussian(Matrix& m, double scale, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = scale * gauss(rng);
    }
}

template <typename T>
void append(Vector& flat, Index& k, const T& m) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) flat(k++) = m(r, c);
}

template <typename T>
void extract(const Vector& flat, Index& k, T& m) {
    for (Index r = 0; r < m.rows(); ++r)
        for (Index c = 0; c < m.cols(); ++c) m(r, c) = flat(k++);
}

template <typename T>
struct Adam {
    T m, v;
    explicit Adam(const T& shape)
        : m(T::Zero(shape.rows(), shape.cols())), v(T::Zero(shape.rows(), shape.cols())) {}

    void update(T& param, const T& grad, double lr, long step) {
        constexpr double beta1 = 0.9;
        constexpr double beta2 = 0.999;
        constexpr double eps = 1e-8;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v.array().matrix() + (1.0 - beta2) * grad.array().square().matrix();
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
        param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
    }
};

struct Gradients {
    Matrix enc_w1, enc_wmu, enc_wlv, dec_w1, dec_w2;
    Vector enc_b1, enc_bmu, enc_blv, dec_b1, dec_b2;
};

ElboTerms backward(const VaeParams& p, const Vector& x, const Vector& noise, Gradients* g) {
    // Forward.
    const Vector he = (p.enc_w1 * x + p.enc_b1).array().tanh();
    const Vector mu = p.enc_wmu * he + p.enc_bmu;
    const Vector lv = p.enc_wlv * he + p.enc_blv;
    const Vector sigma = (0.5 * lv.array()).exp();
    const Vector var = lv.array().exp();
    const Vector z = mu + sigma.cwiseProduct(noise);
    const Vector hd = (p.dec_w1 * z + p.dec_b1).array().tanh();
    const Vector xhat = p.dec_w2 * hd + p.dec_b2;

    ElboTerms terms;
    terms.recon = 0.5 * (xhat - x).squaredNorm();
    terms.kl = 0.5 * (mu.array().square() + var.array() - lv.array() - 1.0).sum();
    terms.total = terms.recon + terms.kl;
    if (g == nullptr) return terms;

    // Backward through the decoder.
    const Vector dxhat = xhat - x;
    g->dec_w2 = dxhat * hd.transpose();
    g->dec_b2 = dxhat;
    const Vector dpre_d = (p.dec_w2.transpose() * dxhat).array() * (1.0 - hd.array().square());
    g->dec_w1 = dpre_d * z.transpose();
    g->dec_b1 = dpre_d;
    const Vector dz = p.dec_w1.transpose() * dpre_d;

    // Reparameterization plus KL contributions.
    const Vector dmu = dz + mu;
    const Vector dlv =
        (0.5 * dz.array() * noise.array() * sigma.array() + 0.5 * (var.array() - 1.0)).matrix();

    g->enc_wmu = dmu * he.transpose();
    g->enc_bmu = dmu;
    g->enc_wlv = dlv * he.transpose();
    g->enc_blv = dlv;
    const Vector dpre_e = (p.enc_wmu.transpose() * dmu + p.enc_wlv.transpose() * dlv).array() *
                          (1.0 - he.array().square());
    g->enc_w1 = dpre_e * x.transpose();
    g->enc_b1 = dpre_e;
    return terms;
}

}  // namespace

Vector VaeParams::flat_parameters() const {
    const Index total = enc_w1.size() + enc_b1.size() + enc_wmu.size() + enc_bmu.size() +
                        enc_wlv.size() + enc_blv.size() + dec_w1.size() + dec_b1.size() +
                        dec_w2.size() + dec_b2.size();
    Vector flat(total);
    Index k = 0;
    append(flat, k, enc_w1);
    append(flat, k, enc_b1);
    append(flat, k, enc_wmu);
    append(flat, k, enc_bmu);
    append(flat, k, enc_wlv);
    append(flat, k, enc_blv);
    append(flat, k, dec_w1);
    append(flat, k, dec_b1);
    append(flat, k, dec_w2);
    append(flat, k, dec_b2);
    return flat;
}

void VaeParams::set_flat_parameters(const Vector& flat) {
    Index k = 0;
    extract(flat, k, enc_w1);
    extract(flat, k, enc_b1);
    extract(flat, k, enc_wmu);
    extract(flat, k, enc_bmu);
    extract(flat, k, enc_wlv);
    extract(flat, k, enc_blv);
    extract(flat, k, dec_w1);
    extract(flat, k, dec_b1);
    extract(flat, k, dec_w2);
    extract(flat, k, dec_b2);
    if (k != flat.size()) throw std::invalid_argument("set_flat_parameters: size mismatch");
}

serialize::Document VaeParams::to_document() const {
    serialize::Document doc;
    doc.put_str("kind", "vae");
    doc.put_int("input_dim", input_dim());
    doc.put_int("hidden_dim", hidden_dim());
    doc.put_int("latent_dim", latent_dim());
    doc.put_mat("enc_w1", enc_w1);
    doc.put_vec("enc_b1", enc_b1);
    doc.put_mat("enc_wmu", enc_wmu);
    doc.put_vec("enc_bmu", enc_bmu);
    doc.put_mat("enc_wlv", enc_wlv);
    doc.put_vec("enc_blv", enc_blv);
    doc.put_mat("dec_w1", dec_w1);
    doc.put_vec("dec_b1", dec_b1);
    doc.put_mat("dec_w2", dec_w2);
    doc.put_vec("dec_b2", dec_b2);
    return doc;
}

VaeParams VaeParams::from_document(const serialize::Document& doc) {
    VaeParams p;
    p.enc_w1 = doc.get_mat("enc_w1");
    p.enc_b1 = doc.get_vec("enc_b1");
    p.enc_wmu = doc.get_mat("enc_wmu");
    p.enc_bmu = doc.get_vec("enc_bmu");
    p.enc_wlv = doc.get_mat("enc_wlv");
    p.enc_blv = doc.get_vec("enc_blv");
    p.dec_w1 = doc.get_mat("dec_w1");
    p.dec_b1 = doc.get_vec("dec_b1");
    p.dec_w2 = doc.get_mat("dec_w2");
    p.dec_b2 = doc.get_vec("dec_b2");
    return p;
}

void VaeParams::save(const std::string& path) const { to_document().save(path); }

VaeParams VaeParams::load(const std::string& path) {
    return from_document(serialize::Document::load(path));
}

VaeParams init_vae(Index input_dim, const VaeHyperparams& hp, std::uint64_t seed) {
    if (input_dim < 1 || hp.latent_dim < 1 || hp.hidden_dim < 1) {
        throw std::invalid_argument("init_vae: dimensions must be >= 1");
    }
    std::mt19937_64 rng(seed);
    VaeParams p;
    const double s_in = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double s_h = 1.0 / std::sqrt(static_cast<double>(hp.hidden_dim));
    const double s_d = 1.0 / std::sqrt(static_cast<double>(hp.latent_dim));
    p.enc_w1.resize(hp.hidden_dim, input_dim);
    fill_gaussian(p.enc_w1, s_in, rng);
    p.enc_b1 = Vector::Zero(hp.hidden_dim);
    p.enc_wmu.resize(hp.latent_dim, hp.hidden_dim);
    fill_gaussian(p.enc_wmu, s_h, rng);
    p.enc_bmu = Vector::Zero(hp.latent_dim);
    p.enc_wlv.resize(hp.latent_dim, hp.hidden_dim);
    fill_gaussian(p.enc_wlv, s_h, rng);
    p.enc_blv = Vector::Zero(hp.latent_dim);
    p.dec_w1.resize(hp.hidden_dim, hp.latent_dim);
    fill_gaussian(p.dec_w1, s_d, rng);
    p.dec_b1 = Vector::Zero(hp.hidden_dim);
    p.dec_w2.resize(input_dim, hp.hidden_dim);
    fill_gaussian(p.dec_w2, s_h, rng);
    p.dec_b2 = Vector::Zero(input_dim);
    return p;
}

LatentEncoding encode(const VaeParams& params, const Vector& x) {
    if (x.size() != params.input_dim()) {
        throw std::invalid_argument("encode: input length " + std::to_string(x.size()) +
                                    " != expected " + std::to_string(params.input_dim()));
    }
    const Vector he = (params.enc_w1 * x + params.enc_b1).array().tanh();
    LatentEncoding enc;
    enc.mu = params.enc_wmu * he + params.enc_bmu;
    enc.var = (params.enc_wlv * he + params.enc_blv).array().exp();
    return enc;
}

Vector decode(const VaeParams& params, const Vector& z) {
    if (z.size() != params.latent_dim()) {
        throw std::invalid_argument("decode: latent length mismatch");
    }
    const Vector hd = (params.dec_w1 * z + params.dec_b1).array().tanh();
    return params.dec_w2 * hd + params.dec_b2;
}

double kl_term(const Vector& mu, const Vector& var) {
    if (mu.size() != var.size()) throw std::invalid_argument("kl_term: size mismatch");
    if ((var.array() <= 0.0).any()) throw std::invalid_argument("kl_term: variances must be > 0");
    return 0.5 * (mu.array().square() + var.array() - var.array().log() - 1.0).sum();
}

ElboTerms elbo_loss(const VaeParams& params, const Vector& x, const Vector& noise) {
    if (x.size() != params.input_dim() || noise.size() != params.latent_dim()) {
        throw std::invalid_argument("elbo_loss: shape mismatch");
    }
    const ElboTerms terms = backward(params, x, noise, nullptr);
    if (!std::isfinite(terms.total)) {
        throw NumericError("elbo_loss: non-finite loss value");
    }
    return terms;
}

ElboTerms elbo_loss_and_gradient(const VaeParams& params, const Vector& x, const Vector& noise,
                                 Vector& grad) {
    if (x.size() != params.input_dim() || noise.size() != params.latent_dim()) {
        throw std::invalid_argument("elbo_loss_and_gradient: shape mismatch");
    }
    Gradients g;
    const ElboTerms terms = backward(params, x, noise, &g);
    const Index total = params.flat_parameters().size();
    grad.resize(total);
    Index k = 0;
    append(grad, k, g.enc_w1);
    append(grad, k, g.enc_b1);
    append(grad, k, g.enc_wmu);
    append(grad, k, g.enc_bmu);
    append(grad, k, g.enc_wlv);
    append(grad, k, g.enc_blv);
    append(grad, k, g.dec_w1);
    append(grad, k, g.dec_b1);
    append(grad, k, g.dec_w2);
    append(grad, k, g.dec_b2);
    return terms;
}

VaeParams train_vae(const std::vector<Vector>& data, const VaeHyperparams& hp,
                    std::uint64_t seed, std::vector<double>* epoch_log) {
    if (data.empty()) throw std::invalid_argument("train_vae: empty data");
    const Index input_dim = data.front().size();
    for (const Vector& x : data) {
        if (x.size() != input_dim) throw std::invalid_argument("train_vae: ragged input data");
    }

    VaeParams p = init_vae(input_dim, hp, seed);

    // Fixed evaluation noise, regenerated identically for every epoch
    // evaluation so logged losses are comparable across epochs.
    auto eval_mean_loss = [&](const VaeParams& params) {
        std::mt19937_64 eval_rng(seed ^ 0xd1b54a32d192ed03ULL);
        std::normal_distribution<double> gauss(0.0, 1.0);
        double total = 0.0;
        Vector noise(hp.latent_dim);
        for (const Vector& x : data) {
            for (Index i = 0; i < noise.size(); ++i) noise(i) = gauss(eval_rng);
            total += backward(params, x, noise, nullptr).total;
        }
        return total / static_cast<double>(data.size());
    };

    if (epoch_log) {
        epoch_log->clear();
        epoch_log->push_back(eval_mean_loss(p));
    }
    if (hp.epochs == 0) return p;

    Adam<Matrix> a_enc_w1(p.enc_w1), a_enc_wmu(p.enc_wmu), a_enc_wlv(p.enc_wlv);
    Adam<Matrix> a_dec_w1(p.dec_w1), a_dec_w2(p.dec_w2);
    Adam<Vector> a_enc_b1(p.enc_b1), a_enc_bmu(p.enc_bmu), a_enc_blv(p.enc_blv);
    Adam<Vector> a_dec_b1(p.dec_b1), a_dec_b2(p.dec_b2);

    std::mt19937_64 order_rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::mt19937_64 noise_rng(seed ^ 0xbf58476d1ce4e5b9ULL);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<size_t> order(data.size());
    std::iota(order.begin(), order.end(), size_t{0});
    Vector noise(hp.latent_dim);
    Gradients g;
    long step = 0;

    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), order_rng);
        for (size_t pos = 0; pos < order.size(); ++pos) {
            const Vector& x = data[order[pos]];
            for (Index i = 0; i < noise.size(); ++i) noise(i) = gauss(noise_rng);
            const ElboTerms terms = backward(p, x, noise, &g);
            if (!std::isfinite(terms.total)) {
                throw NumericError("vae training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", step " + std::to_string(pos));
            }
            ++step;
            a_enc_w1.update(p.enc_w1, g.enc_w1, hp.learning_rate, step);
            a_enc_b1.update(p.enc_b1, g.enc_b1, hp.learning_rate, step);
            a_enc_wmu.update(p.enc_wmu, g.enc_wmu, hp.learning_rate, step);
            a_enc_bmu.update(p.enc_bmu, g.enc_bmu, hp.learning_rate, step);
            a_enc_wlv.update(p.enc_wlv, g.enc_wlv, hp.learning_rate, step);
            a_enc_blv.update(p.enc_blv, g.enc_blv, hp.learning_rate, step);
            a_dec_w1.update(p.dec_w1, g.dec_w1, hp.learning_rate, step);
            a_dec_b1.update(p.dec_b1, g.dec_b1, hp.learning_rate, step);
            a_dec_w2.update(p.dec_w2, g.dec_w2, hp.learning_rate, step);
            a_dec_b2.update(p.dec_b2, g.dec_b2, hp.learning_rate, step);
        }
        if (epoch_log) epoch_log->push_back(eval_mean_loss(p));
    }
    return p;
}

}  // namespace tsreject::vae
