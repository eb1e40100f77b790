#include "tsreject/novelty.hpp"

namespace tsreject::novelty {

stats::GaussianSummary fit_latent_summary(const vae::VaeParams& params,
                                          const std::vector<Vector>& train_windows) {
    if (train_windows.size() < 2) {
        throw std::invalid_argument("fit_latent_summary: need at least 2 training windows");
    }
    std::vector<Vector> means, variances;
    means.reserve(train_windows.size());
    variances.reserve(train_windows.size());
    for (const Vector& w : train_windows) {
        auto enc = vae::encode(params, w);
        means.push_back(std::move(enc.mu));
        variances.push_back(std::move(enc.var));
    }
    return stats::fit_gaussian_summary(means, variances);
}

double novelty_score(const NoveltyRejector& rejector, const Vector& window) {
    const auto enc = vae::encode(rejector.vae_params, window);
    return stats::mahalanobis(enc.mu, rejector.summary);
}

int decide_novelty(const NoveltyRejector& rejector, double score) {
    return score > rejector.d_threshold ? 1 : 0;
}

double calibrate_novelty(const std::vector<double>& val_scores, double target_rate) {
    return stats::rejection_threshold(val_scores, target_rate);
}

double chi_threshold(double prob, Index latent_dim) {
    return stats::chi_quantile(prob, static_cast<long>(latent_dim));
}

void write_rejector(const NoveltyRejector& rejector, serialize::Document& doc) {
    doc.put_num("d_threshold", rejector.d_threshold);
    doc.put_num("novelty_realized_val_rate", rejector.realized_val_rate);
    doc.put_vec("latent_mean", rejector.summary.mean);
    doc.put_mat("latent_covariance", rejector.summary.covariance);
    doc.put_mat("latent_precision", rejector.summary.precision);
    doc.put_num("latent_eps_reg", rejector.summary.eps_reg);
}

NoveltyRejector read_rejector(const serialize::Document& doc) {
    NoveltyRejector rejector;
    rejector.d_threshold = doc.get_num("d_threshold");
    rejector.realized_val_rate = doc.get_num("novelty_realized_val_rate");
    rejector.summary.mean = doc.get_vec("latent_mean");
    rejector.summary.covariance = doc.get_mat("latent_covariance");
    rejector.summary.precision = doc.get_mat("latent_precision");
    rejector.summary.eps_reg = doc.get_num("latent_eps_reg");
    return rejector;
}

}  // namespace tsreject::novelty
