// Test-only oracles: independent routes to the quantities the library
// computes, used to freeze expected values. Nothing here calls back into
// the implementation under test.
#ifndef TSREJECT_TESTS_ORACLES_HPP
#define TSREJECT_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Recursive adaptive Simpson quadrature.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double tol = 1e-12, int depth = 40) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fb = f(b), fm = f(m);
    std::function<double(double, double, double, double, double, double, int)> helper =
        [&](double lo, double hi, double flo, double fhi, double fmid, double eps,
            int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lm = 0.5 * (lo + mid), rm = 0.5 * (mid + hi);
        const double flm = f(lm), frm = f(rm);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::fabs(left + right - whole) < 15.0 * eps) {
            return left + right + (left + right - whole) / 15.0;
        }
        return helper(lo, mid, flo, fmid, flm, 0.5 * eps, d - 1) +
               helper(mid, hi, fmid, fhi, frm, 0.5 * eps, d - 1);
    };
    return helper(a, b, fa, fb, fm, tol, depth);
}

inline double t_density(double x, double dof) {
    const double v = dof;
    return std::exp(std::lgamma(0.5 * (v + 1.0)) - std::lgamma(0.5 * v) -
                    0.5 * std::log(v * M_PI) - 0.5 * (v + 1.0) * std::log1p(x * x / v));
}

// P(T > t) for Student-t by direct quadrature of the density on [0, t].
inline double t_upper_tail_by_integration(double t, double dof) {
    return 0.5 - adaptive_simpson([dof](double x) { return t_density(x, dof); }, 0.0, t);
}

// Two-pass mean and sample standard deviation.
inline std::pair<double, double> two_pass_mean_std(const std::vector<double>& xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) /
                        static_cast<double>(xs.size());
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(xs.size() - 1))};
}

// Eq.-16-style covariance by an explicit double loop over entries.
inline Matrix brute_force_latent_covariance(const std::vector<Vector>& means,
                                            const std::vector<Vector>& variances,
                                            const Vector& center) {
    const auto d = means.front().size();
    Matrix sigma = Matrix::Zero(d, d);
    for (size_t i = 0; i < means.size(); ++i) {
        for (Eigen::Index r = 0; r < d; ++r) {
            for (Eigen::Index c = 0; c < d; ++c) {
                double term = (means[i](r) - center(r)) * (means[i](c) - center(c));
                if (r == c) term += variances[i](r);
                sigma(r, c) += term;
            }
        }
    }
    return sigma / static_cast<double>(means.size());
}

// Mahalanobis distance through a dense explicit inverse (full-pivot LU).
inline double mahalanobis_by_dense_inverse(const Vector& z, const Vector& mean,
                                           const Matrix& covariance) {
    const Matrix inv = Eigen::FullPivLU<Matrix>(covariance).inverse();
    const Vector diff = z - mean;
    return std::sqrt(diff.dot(inv * diff));
}

// Monte-Carlo KL(N(mu, diag var) || N(0, I)).
inline double monte_carlo_kl(const Vector& mu, const Vector& var, size_t draws,
                             std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto d = mu.size();
    double total = 0.0;
    for (size_t i = 0; i < draws; ++i) {
        double log_q = 0.0, log_p = 0.0;
        for (Eigen::Index k = 0; k < d; ++k) {
            const double s = std::sqrt(var(k));
            const double z = mu(k) + s * gauss(rng);
            log_q += -0.5 * std::log(2.0 * M_PI * var(k)) -
                     0.5 * (z - mu(k)) * (z - mu(k)) / var(k);
            log_p += -0.5 * std::log(2.0 * M_PI) - 0.5 * z * z;
        }
        total += log_q - log_p;
    }
    return total / static_cast<double>(draws);
}

// Central finite differences of a scalar function of a parameter vector.
inline Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                         const Vector& at, const std::vector<Eigen::Index>& idx,
                                         double step = 1e-5) {
    Vector grad = Vector::Zero(static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) {
        Vector plus = at, minus = at;
        plus(idx[k]) += step;
        minus(idx[k]) -= step;
        grad(static_cast<Eigen::Index>(k)) = (f(plus) - f(minus)) / (2.0 * step);
    }
    return grad;
}

// Spearman rank correlation.
inline double rank_correlation(const std::vector<double>& a, const std::vector<double>& b) {
    auto ranks = [](const std::vector<double>& xs) {
        std::vector<size_t> order(xs.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](size_t i, size_t j) { return xs[i] < xs[j]; });
        std::vector<double> r(xs.size());
        for (size_t pos = 0; pos < order.size(); ++pos) r[order[pos]] = static_cast<double>(pos);
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double mean = (n - 1.0) / 2.0;
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        cov += (ra[i] - mean) * (rb[i] - mean);
        va += (ra[i] - mean) * (ra[i] - mean);
        vb += (rb[i] - mean) * (rb[i] - mean);
    }
    return cov / std::sqrt(va * vb);
}

}  // namespace oracles

#endif  // TSREJECT_TESTS_ORACLES_HPP
