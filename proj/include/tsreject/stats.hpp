#ifndef TSREJECT_STATS_HPP
#define TSREJECT_STATS_HPP

#include <vector>

#include "tsreject/common.hpp"

namespace tsreject::stats {

/**
 * Significance level and degrees of freedom for a Student-t interval.
 * alpha in (0,1), dof >= 1.
 */
struct ConfidenceSpec {
    double alpha = 0.05;
    long dof = 1;

    void validate() const;
};

/**
 * Latent-space Gaussian fitted from per-sample encoder means and variances.
 *
 * covariance is the raw estimate; precision is the inverse of
 * (covariance + eps_reg * I), with eps_reg chosen from the covariance trace
 * so collapsed dimensions never make the inversion fail.
 */
struct GaussianSummary {
    Vector mean;
    Matrix covariance;
    Matrix precision;
    double eps_reg = 0.0;

    Index dim() const { return mean.size(); }
};

/// Uncentered error variance (1/(n-1)) * sum r_i^2; with centered=true the
/// usual sample variance of the residuals instead. Requires n >= 2.
double error_variance(const std::vector<double>& residuals, bool centered = false);

/// Regularized incomplete beta function I_x(a, b) via continued fraction.
double incomplete_beta(double a, double b, double x);

/// Regularized lower incomplete gamma P(a, x).
double incomplete_gamma_p(double a, double x);

/// Student-t density with dof degrees of freedom.
double t_pdf(double t, double dof);

/// P(T > t) for T ~ Student-t(dof), t >= 0.
double t_upper_tail(double t, double dof);

/// Upper alpha/2 critical value of the Student-t distribution, i.e. the t
/// with P(T > t) = alpha/2. Inverts the incomplete beta representation with
/// a bisection-bracketed Newton iteration; accurate to better than 1e-6.
double t_quantile(const ConfidenceSpec& spec);

/// prob-quantile of the chi distribution (sqrt of a chi-square quantile)
/// with dof degrees of freedom. prob in (0,1).
double chi_quantile(double prob, long dof);

/// Variance rejection threshold (W / (2 t_{alpha/2,dof}))^2 for interval
/// width W > 0.
double variance_threshold(double width, const ConfidenceSpec& spec);

/// Recover the interval width W from a variance threshold: W = 2 t sqrt(v).
double width_from_threshold(double var_threshold, const ConfidenceSpec& spec);

/**
 * Fit the latent Gaussian from per-sample means mu_i and per-sample
 * diagonal variances sigma2_i:
 *
 *   mean       = (1/n) sum mu_i
 *   covariance = (1/n) sum [ diag(sigma2_i) + (mu_i - mean)(mu_i - mean)^T ]
 *
 * precision is computed from covariance + eps_reg * I by Cholesky
 * factorization, eps_reg = 1e-6 * trace(covariance) / d.
 */
GaussianSummary fit_gaussian_summary(const std::vector<Vector>& means,
                                     const std::vector<Vector>& variances);

/// sqrt((z - mean)^T precision (z - mean)); always >= 0.
double mahalanobis(const Vector& z, const GaussianSummary& summary);

/**
 * Threshold such that a fraction ~= target_rate of the given scores lies
 * strictly above it: the empirical (1 - target_rate) quantile, taken as the
 * midpoint of the two bracketing order statistics. target_rate in [0,1);
 * rate 0 returns the maximum score.
 */
double rejection_threshold(std::vector<double> scores, double target_rate);

/// Fraction of scores strictly above the threshold.
double realized_rejection_rate(const std::vector<double>& scores, double threshold);

}  // namespace tsreject::stats

#endif  // TSREJECT_STATS_HPP
