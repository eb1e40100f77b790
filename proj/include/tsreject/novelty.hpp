#ifndef TSREJECT_NOVELTY_HPP
#define TSREJECT_NOVELTY_HPP

#include <limits>
#include <vector>

#include "tsreject/common.hpp"
#include "tsreject/serialize.hpp"
#include "tsreject/stats.hpp"
#include "tsreject/vae.hpp"

namespace tsreject::novelty {

/**
 * Novelty rejector: VAE encoder, latent Gaussian summary of the training
 * data, and a Mahalanobis-distance threshold. A score strictly above
 * d_threshold marks the window as novel; equality accepts. d_threshold of
 * +inf disables novelty rejection.
 */
struct NoveltyRejector {
    vae::VaeParams vae_params;
    stats::GaussianSummary summary;
    double d_threshold = std::numeric_limits<double>::infinity();
    double realized_val_rate = 0.0;

    bool calibrated() const { return summary.dim() > 0; }
};

/// Encode every training window and fit the latent Gaussian from the
/// per-sample means and variances.
stats::GaussianSummary fit_latent_summary(const vae::VaeParams& params,
                                          const std::vector<Vector>& train_windows);

/// Mahalanobis distance of the window's latent mean from the training
/// summary. Only the encoder mean enters the score.
double novelty_score(const NoveltyRejector& rejector, const Vector& window);

/// 1 iff score strictly exceeds d_threshold.
int decide_novelty(const NoveltyRejector& rejector, double score);

/// Empirical (1 - target_rate) quantile of validation scores.
double calibrate_novelty(const std::vector<double>& val_scores, double target_rate);

/// Heuristic alternative when no validation data exists: the prob-quantile
/// of a chi distribution with latent_dim degrees of freedom. Latents are
/// not exactly Gaussian, so rate calibration is preferred.
double chi_threshold(double prob, Index latent_dim);

void write_rejector(const NoveltyRejector& rejector, serialize::Document& doc);
NoveltyRejector read_rejector(const serialize::Document& doc);

}  // namespace tsreject::novelty

#endif  // TSREJECT_NOVELTY_HPP
