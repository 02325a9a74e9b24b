#include "volmom/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "volmom/quadrature.hpp"
#include "volmom/special_functions.hpp"

namespace volmom {

namespace {

constexpr double kVarianceTol = 1e-10;

void require_spread(double m1, double m2, const char* who) {
    if (!(m1 > 0.0)) throw ZeroVarianceError(std::string(who) + ": first moment not positive");
    if (m2 <= m1 * m1 * (1.0 + kVarianceTol))
        throw ZeroVarianceError(std::string(who) + ": second moment at the zero-variance bound");
}

// E[min(X, c)] for X ~ LogNormal(mu, sigma); mean e^{mu + sigma^2/2}.
double lognormal_capped(double mu, double sigma, double c) {
    const double mean = std::exp(mu + 0.5 * sigma * sigma);
    if (std::isinf(c)) return mean;
    if (c <= 0.0) return 0.0;
    if (sigma == 0.0) return std::min(mean, c);
    const double lc = std::log(c);
    return mean * normal_cdf((lc - mu - sigma * sigma) / sigma) +
           c * (1.0 - normal_cdf((lc - mu) / sigma));
}

}  // namespace

ChiSquareFit fit_chi_square(double m1, double m2) {
    require_spread(m1, m2, "fit_chi_square");
    ChiSquareFit f;
    f.a = 2.0 * m1 * m1 / (m2 - m1 * m1);
    f.scale = m1 / f.a;
    return f;
}

LogNormalFit fit_lognormal(double m1, double m2) {
    require_spread(m1, m2, "fit_lognormal");
    LogNormalFit f;
    f.mu = std::log(m1 * m1 / std::sqrt(m2));
    f.sigma = std::sqrt(std::log(m2 / (m1 * m1)));
    return f;
}

PearsonIIIFit fit_pearson3(double m1, double m2, double m3) {
    const double var = m2 - m1 * m1;
    if (var <= std::abs(m1 * m1) * kVarianceTol)
        throw ZeroVarianceError("fit_pearson3: zero variance");
    const double skew = m3 + 2.0 * m1 * m1 * m1 - 3.0 * m1 * m2;
    if (!(skew > 0.0)) throw NonPositiveSkewError("fit_pearson3: non-positive skew term");
    PearsonIIIFit f;
    f.a = m1 - 2.0 * var * var / skew;
    f.b = skew / (2.0 * var);
    f.p = 4.0 * var * var * var / (skew * skew);
    return f;
}

BivariateLogNormalFit fit_bivariate_lognormal(double m10, double m20, double m01, double m02,
                                              double m11) {
    const LogNormalFit f1 = fit_lognormal(m10, m20);
    const LogNormalFit f2 = fit_lognormal(m01, m02);
    if (!(m11 > 0.0))
        throw CorrelationOutOfRangeError("fit_bivariate_lognormal: mixed moment not positive");
    BivariateLogNormalFit f;
    f.mu1 = f1.mu;
    f.sigma1 = f1.sigma;
    f.mu2 = f2.mu;
    f.sigma2 = f2.sigma;
    const double rho = std::log(m11 / (m10 * m01)) / (f.sigma1 * f.sigma2);
    if (std::abs(rho) > 1.0 + 1e-8)
        throw CorrelationOutOfRangeError("fit_bivariate_lognormal: |rho| = " +
                                         std::to_string(std::abs(rho)));
    f.rho = std::clamp(rho, -1.0, 1.0);
    return f;
}

double capped_expectation(const ChiSquareFit& f, PayoffKind kind, double cap) {
    if (cap < 0.0) throw std::invalid_argument("capped_expectation: negative cap");
    if (cap == 0.0) return 0.0;
    const double mean = f.scale * f.a;
    if (kind == PayoffKind::RV) {
        if (std::isinf(cap)) return mean;
        const double k = cap / f.scale;
        return f.scale * (k * (1.0 - chi_square_cdf(f.a, k)) + f.a * chi_square_cdf(f.a + 2.0, k));
    }
    // E[sqrt(X)] of a chi-square is sqrt(2) Gamma((a+1)/2) / Gamma(a/2).
    const double gratio = std::exp(std::lgamma(0.5 * (f.a + 1.0)) - std::lgamma(0.5 * f.a));
    if (std::isinf(cap)) return std::sqrt(2.0 * f.scale) * gratio;
    const double k = cap / f.scale;
    return std::sqrt(f.scale) *
           (std::sqrt(k) * (1.0 - chi_square_cdf(f.a, k)) +
            std::sqrt(2.0) * gratio * regularized_gamma_p(0.5 * (f.a + 1.0), 0.5 * k));
}

double capped_expectation(const LogNormalFit& f, PayoffKind kind, double cap) {
    if (cap < 0.0) throw std::invalid_argument("capped_expectation: negative cap");
    if (cap == 0.0) return 0.0;
    if (kind == PayoffKind::RV) return lognormal_capped(f.mu, f.sigma, cap);
    // sqrt(X) is log-normal with halved parameters.
    return lognormal_capped(0.5 * f.mu, 0.5 * f.sigma, std::sqrt(cap));
}

double capped_expectation(const PearsonIIIFit& f, PayoffKind kind, double cap) {
    if (kind != PayoffKind::RV)
        throw UnsupportedPayoffError("capped_expectation: sqrt payoff unsupported for Pearson III");
    if (cap < 0.0) throw std::invalid_argument("capped_expectation: negative cap");
    const double mean = f.a + f.b * f.p;
    if (std::isinf(cap)) return mean;
    if (cap <= f.a) return cap;  // support starts at a
    const double k = (cap - f.a) / f.b;
    const double low = regularized_gamma_p(f.p, k);
    return f.a * low + f.b * f.p * regularized_gamma_p(f.p + 1.0, k) + cap * (1.0 - low);
}

double cdf(const ChiSquareFit& f, double x) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    return chi_square_cdf(f.a, x / f.scale);
}

double cdf(const LogNormalFit& f, double x) {
    if (x <= 0.0) return 0.0;
    if (std::isinf(x)) return 1.0;
    if (f.sigma == 0.0) return std::log(x) < f.mu ? 0.0 : 1.0;
    return normal_cdf((std::log(x) - f.mu) / f.sigma);
}

double cdf(const PearsonIIIFit& f, double x) {
    if (x <= f.a) return 0.0;
    if (std::isinf(x)) return 1.0;
    return regularized_gamma_p(f.p, (x - f.a) / f.b);
}

double ratio_expectation(const BivariateLogNormalFit& f) {
    return std::exp(f.mu1 + 0.5 * f.sigma1 * f.sigma1 - f.mu2 + 0.5 * f.sigma2 * f.sigma2 -
                    f.rho * f.sigma1 * f.sigma2);
}

double ratio_expectation_from_moments(double m10, double m01, double m02, double m11) {
    return m10 * m10 * m02 / (m01 * m01 * m11);
}

double capped_ratio_expectation(const BivariateLogNormalFit& f, double cap) {
    if (!(cap > 0.0)) return 0.0;
    if (std::isinf(cap)) return ratio_expectation(f);
    if (f.sigma2 == 0.0)
        return lognormal_capped(f.mu1 - f.mu2, f.sigma1, cap);

    // Condition on Y2 = mu2 + sigma2 z: X1/X2 is log-normal with location
    // mu1 + rho sigma1 z - Y2 and scale sigma1 sqrt(1 - rho^2); the outer
    // integral over the standard normal z is smooth, so a fixed rule refined
    // until two consecutive orders agree suffices.
    const double condSigma = f.sigma1 * std::sqrt(std::max(0.0, 1.0 - f.rho * f.rho));
    const auto integrand = [&](double z) {
        const double y2 = f.mu2 + f.sigma2 * z;
        const double condMu = f.mu1 + f.rho * f.sigma1 * z - y2;
        const double density = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        return density * lognormal_capped(condMu, condSigma, cap);
    };
    double prev = gauss_legendre_integrate(integrand, -8.0, 8.0, 64);
    for (int n : {128, 256, 512}) {
        const double next = gauss_legendre_integrate(integrand, -8.0, 8.0, n);
        if (std::abs(next - prev) <= 1e-6) return next;
        prev = next;
    }
    throw std::runtime_error("capped_ratio_expectation: quadrature did not converge");
}

double lognormal_call(const LogNormalFit& f, double k) {
    const double mean = std::exp(f.mu + 0.5 * f.sigma * f.sigma);
    if (k <= 0.0) return mean - k;
    if (f.sigma == 0.0) return std::max(mean - k, 0.0);
    const double d1 = (f.mu + f.sigma * f.sigma - std::log(k)) / f.sigma;
    return mean * normal_cdf(d1) - k * normal_cdf(d1 - f.sigma);
}

}  // namespace volmom
