#include "tsreject/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tsreject::stats {

namespace {

constexpr int kMaxCfIter = 4000;
constexpr double kCfEps = 3e-16;
constexpr double kFpMin = 1e-300;

double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// Continued fraction for the incomplete beta (modified Lentz).
double beta_cf(double a, double b, double x) {
    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kMaxCfIter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kCfEps) return h;
    }
    throw NumericError("incomplete_beta: continued fraction did not converge");
}

// Series expansion of P(a, x), valid for x < a + 1.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int n = 0; n < kMaxCfIter; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * kCfEps) {
            return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete_gamma_p: series did not converge");
}

// Continued fraction for Q(a, x), valid for x >= a + 1.
double gamma_q_cf(double a, double x) {
    double b = x + 1.0 - a;
    double c = 1.0 / kFpMin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= kMaxCfIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < kFpMin) d = kFpMin;
        c = b + an / c;
        if (std::fabs(c) < kFpMin) c = kFpMin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < kCfEps) {
            return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
        }
    }
    throw NumericError("incomplete_gamma_p: continued fraction did not converge");
}

// Generic decreasing-function root solve on [0, inf): find t >= 0 with
// f(t) = target, where f is strictly decreasing. Newton steps are clamped
// into a maintained bracket; bisection takes over when Newton leaves it.
template <typename F, typename DF>
double solve_decreasing(F f, DF df, double target, double hi_start) {
    double lo = 0.0;
    double hi = hi_start;
    int guard = 0;
    while (f(hi) > target) {
        lo = hi;
        hi *= 2.0;
        if (++guard > 400) throw NumericError("quantile solve: bracketing failed");
    }
    double t = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fv = f(t) - target;
        if (fv > 0.0) {
            lo = t;
        } else {
            hi = t;
        }
        const double deriv = df(t);
        double step;
        if (deriv != 0.0 && std::isfinite(deriv)) {
            step = fv / deriv;  // f decreasing: deriv < 0, step moves toward root
        } else {
            step = 0.0;
        }
        double next = t - step;
        if (!(next > lo && next < hi)) {
            next = 0.5 * (lo + hi);
        }
        if (std::fabs(next - t) <= 1e-12 * std::max(1.0, std::fabs(t))) {
            return next;
        }
        t = next;
    }
    return t;
}

}  // namespace

void ConfidenceSpec::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("ConfidenceSpec: alpha must lie in (0,1), got " +
                                    std::to_string(alpha));
    }
    if (dof < 1) {
        throw std::invalid_argument("ConfidenceSpec: dof must be >= 1, got " +
                                    std::to_string(dof));
    }
}

double error_variance(const std::vector<double>& residuals, bool centered) {
    const size_t n = residuals.size();
    if (n < 2) {
        throw std::invalid_argument("error_variance: need at least 2 residuals, got " +
                                    std::to_string(n));
    }
    double sum = 0.0;
    if (centered) {
        double mean = 0.0;
        for (double r : residuals) mean += r;
        mean /= static_cast<double>(n);
        for (double r : residuals) sum += (r - mean) * (r - mean);
    } else {
        for (double r : residuals) sum += r * r;
    }
    return sum / static_cast<double>(n - 1);
}

double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_bt = a * std::log(x) + b * std::log1p(-x) - log_beta(a, b);
    const double bt = std::exp(ln_bt);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return bt * beta_cf(a, b, x) / a;
    }
    return 1.0 - bt * beta_cf(b, a, 1.0 - x) / b;
}

double incomplete_gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) {
        throw std::invalid_argument("incomplete_gamma_p: requires x >= 0 and a > 0");
    }
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double t_pdf(double t, double dof) {
    const double v = dof;
    const double ln = std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                      0.5 * std::log(v * M_PI) -
                      0.5 * (v + 1.0) * std::log1p(t * t / v);
    return std::exp(ln);
}

double t_upper_tail(double t, double dof) {
    if (t < 0.0) throw std::invalid_argument("t_upper_tail: t must be >= 0");
    const double x = dof / (dof + t * t);
    return 0.5 * incomplete_beta(0.5 * dof, 0.5, x);
}

double t_quantile(const ConfidenceSpec& spec) {
    spec.validate();
    const double target = 0.5 * spec.alpha;  // upper tail mass
    const double v = static_cast<double>(spec.dof);
    return solve_decreasing(
        [v](double t) { return t_upper_tail(t, v); },
        [v](double t) { return -t_pdf(t, v); }, target, 1.0);
}

double chi_quantile(double prob, long dof) {
    if (!(prob > 0.0 && prob < 1.0)) {
        throw std::invalid_argument("chi_quantile: prob must lie in (0,1)");
    }
    if (dof < 1) throw std::invalid_argument("chi_quantile: dof must be >= 1");
    const double a = 0.5 * static_cast<double>(dof);
    // Solve P(a, y/2) = prob for the chi-square quantile y, then take sqrt.
    // The upper tail Q(a, y/2) is decreasing in y, so reuse the same solver.
    const double target = 1.0 - prob;
    const double y = solve_decreasing(
        [a](double y) { return 1.0 - incomplete_gamma_p(a, 0.5 * y); },
        [a](double y) {
            const double half = 0.5 * y;
            if (half <= 0.0) return 0.0;
            return -0.5 * std::exp((a - 1.0) * std::log(half) - half - std::lgamma(a));
        },
        target, static_cast<double>(dof) + 10.0);
    return std::sqrt(y);
}

double variance_threshold(double width, const ConfidenceSpec& spec) {
    if (!(width > 0.0)) {
        throw std::invalid_argument("variance_threshold: interval width must be > 0, got " +
                                    std::to_string(width));
    }
    const double t = t_quantile(spec);
    const double half = width / (2.0 * t);
    return half * half;
}

double width_from_threshold(double var_threshold, const ConfidenceSpec& spec) {
    if (var_threshold < 0.0) {
        throw std::invalid_argument("width_from_threshold: threshold must be >= 0");
    }
    return 2.0 * t_quantile(spec) * std::sqrt(var_threshold);
}

GaussianSummary fit_gaussian_summary(const std::vector<Vector>& means,
                                     const std::vector<Vector>& variances) {
    const size_t n = means.size();
    if (n < 2) {
        throw std::invalid_argument("fit_gaussian_summary: need at least 2 samples");
    }
    if (variances.size() != n) {
        throw std::invalid_argument("fit_gaussian_summary: means/variances count mismatch");
    }
    const Index d = means.front().size();
    for (size_t i = 0; i < n; ++i) {
        if (means[i].size() != d || variances[i].size() != d) {
            throw std::invalid_argument("fit_gaussian_summary: dimension mismatch at sample " +
                                        std::to_string(i));
        }
        if ((variances[i].array() < 0.0).any()) {
            throw std::invalid_argument("fit_gaussian_summary: negative variance at sample " +
                                        std::to_string(i));
        }
    }

    GaussianSummary out;
    out.mean = Vector::Zero(d);
    for (const Vector& mu : means) out.mean += mu;
    out.mean /= static_cast<double>(n);

    out.covariance = Matrix::Zero(d, d);
    for (size_t i = 0; i < n; ++i) {
        out.covariance += variances[i].asDiagonal();
        const Vector centered = means[i] - out.mean;
        out.covariance += centered * centered.transpose();
    }
    out.covariance /= static_cast<double>(n);
    out.covariance = 0.5 * (out.covariance + out.covariance.transpose()).eval();

    out.eps_reg = 1e-6 * out.covariance.trace() / static_cast<double>(d);
    Matrix regularized = out.covariance;
    regularized.diagonal().array() += out.eps_reg;
    Eigen::LLT<Matrix> llt(regularized);
    if (llt.info() != Eigen::Success) {
        throw NumericError("fit_gaussian_summary: Cholesky factorization failed after "
                           "regularization (eps_reg = " + std::to_string(out.eps_reg) + ")");
    }
    out.precision = llt.solve(Matrix::Identity(d, d));
    out.precision = 0.5 * (out.precision + out.precision.transpose()).eval();
    return out;
}

double mahalanobis(const Vector& z, const GaussianSummary& summary) {
    if (z.size() != summary.dim()) {
        throw std::invalid_argument("mahalanobis: vector dimension " +
                                    std::to_string(z.size()) + " != summary dimension " +
                                    std::to_string(summary.dim()));
    }
    const Vector diff = z - summary.mean;
    const double q = diff.dot(summary.precision * diff);
    return std::sqrt(std::max(q, 0.0));
}

double rejection_threshold(std::vector<double> scores, double target_rate) {
    if (scores.empty()) {
        throw std::invalid_argument("rejection_threshold: empty score set");
    }
    if (!(target_rate >= 0.0 && target_rate < 1.0)) {
        throw std::invalid_argument("rejection_threshold: target_rate must lie in [0,1), got " +
                                    std::to_string(target_rate));
    }
    std::sort(scores.begin(), scores.end());
    const size_t n = scores.size();
    const auto m = static_cast<size_t>(std::floor(target_rate * static_cast<double>(n) + 1e-9));
    if (m == 0) return scores.back();
    return 0.5 * (scores[n - m - 1] + scores[n - m]);
}

double realized_rejection_rate(const std::vector<double>& scores, double threshold) {
    if (scores.empty()) return 0.0;
    size_t above = 0;
    for (double s : scores) {
        if (s > threshold) ++above;
    }
    return static_cast<double>(above) / static_cast<double>(scores.size());
}

}  // namespace tsreject::stats
