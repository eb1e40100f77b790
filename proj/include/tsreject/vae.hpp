#ifndef TSREJECT_VAE_HPP
#define TSREJECT_VAE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "tsreject/common.hpp"
#include "tsreject/serialize.hpp"

namespace tsreject::vae {

struct VaeHyperparams {
    Index latent_dim = 8;
    Index hidden_dim = 64;
    int epochs = 10;
    double learning_rate = 1e-3;
};

/**
 * Encoder/decoder weights of a Gaussian VAE over flattened windows.
 * Encoder: input -> tanh hidden -> (latent mean, latent log-variance).
 * Decoder: latent -> tanh hidden -> linear reconstruction.
 */
struct VaeParams {
    Matrix enc_w1;
    Vector enc_b1;
    Matrix enc_wmu;
    Vector enc_bmu;
    Matrix enc_wlv;
    Vector enc_blv;
    Matrix dec_w1;
    Vector dec_b1;
    Matrix dec_w2;
    Vector dec_b2;

    Index input_dim() const { return enc_w1.cols(); }
    Index hidden_dim() const { return enc_w1.rows(); }
    Index latent_dim() const { return enc_wmu.rows(); }

    Vector flat_parameters() const;
    void set_flat_parameters(const Vector& flat);

    serialize::Document to_document() const;
    static VaeParams from_document(const serialize::Document& doc);
    void save(const std::string& path) const;
    static VaeParams load(const std::string& path);
};

/// Encoder outputs for one window: latent mean and (positive) variance.
struct LatentEncoding {
    Vector mu;
    Vector var;
};

struct ElboTerms {
    double total = 0.0;
    double recon = 0.0;
    double kl = 0.0;
};

/// Seeded random initialization (biases zero, weights ~ N(0, 1/fan_in)).
VaeParams init_vae(Index input_dim, const VaeHyperparams& hp, std::uint64_t seed);

/// Deterministic encoder forward pass; var = exp(log-variance head).
LatentEncoding encode(const VaeParams& params, const Vector& x);

/// Deterministic decoder forward pass.
Vector decode(const VaeParams& params, const Vector& z);

/// Closed-form KL(N(mu, diag var) || N(0, I)) = 0.5 sum(mu^2 + var - log var - 1).
double kl_term(const Vector& mu, const Vector& var);

/**
 * One-sample ELBO estimate with reparameterized latent z = mu + sigma*noise:
 * recon = 0.5 * |decode(z) - x|^2 (unit-variance Gaussian decoder, additive
 * constant dropped), kl as above, total = recon + kl.
 */
ElboTerms elbo_loss(const VaeParams& params, const Vector& x, const Vector& noise);

/// elbo_loss plus analytic gradients of total w.r.t. every parameter, in
/// the flat_parameters() layout.
ElboTerms elbo_loss_and_gradient(const VaeParams& params, const Vector& x, const Vector& noise,
                                 Vector& grad);

/**
 * Train by per-sample Adam on the one-sample ELBO, fully deterministic for
 * a fixed seed. epoch_log (when given) receives epochs+1 entries: the mean
 * ELBO under a fixed evaluation noise set before training and after each
 * epoch. Throws NumericError on divergence, reporting epoch and step.
 */
VaeParams train_vae(const std::vector<Vector>& data, const VaeHyperparams& hp,
                    std::uint64_t seed, std::vector<double>* epoch_log = nullptr);

}  // namespace tsreject::vae

#endif  // TSREJECT_VAE_HPP
