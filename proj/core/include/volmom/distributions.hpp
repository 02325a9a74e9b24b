#pragma once

#include <stdexcept>
#include <variant>

namespace volmom {

struct ZeroVarianceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NonPositiveSkewError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CorrelationOutOfRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct UnsupportedPayoffError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class PayoffKind { RV, SqrtRV };

/// Scaled chi-square: X = scale * chi2(a), mean = scale * a = m1.
struct ChiSquareFit {
    double a = 0.0;
    double scale = 0.0;
};

struct LogNormalFit {
    double mu = 0.0;
    double sigma = 0.0;
};

/// Pearson Type III on [a, inf): X = a + b * Gamma(p).
struct PearsonIIIFit {
    double a = 0.0;
    double b = 0.0;
    double p = 0.0;
};

struct BivariateLogNormalFit {
    double mu1 = 0.0, sigma1 = 0.0;
    double mu2 = 0.0, sigma2 = 0.0;
    double rho = 0.0;
};

ChiSquareFit fit_chi_square(double m1, double m2);
LogNormalFit fit_lognormal(double m1, double m2);
PearsonIIIFit fit_pearson3(double m1, double m2, double m3);
BivariateLogNormalFit fit_bivariate_lognormal(double m10, double m20, double m01, double m02,
                                              double m11);

/// E[min(X, cap)] or E[min(sqrt(X), sqrt(cap))] under the fitted law.
/// cap = +inf yields the uncapped expectation.
double capped_expectation(const ChiSquareFit& f, PayoffKind kind, double cap);
double capped_expectation(const LogNormalFit& f, PayoffKind kind, double cap);
double capped_expectation(const PearsonIIIFit& f, PayoffKind kind, double cap);

double cdf(const ChiSquareFit& f, double x);
double cdf(const LogNormalFit& f, double x);
double cdf(const PearsonIIIFit& f, double x);

/// E[X1/X2] from the fitted parameters.
double ratio_expectation(const BivariateLogNormalFit& f);
/// Same expectation in pre-assigned-moment form, m10^2 m02 / (m01^2 m11);
/// agrees with the parameter form as an algebraic identity.
double ratio_expectation_from_moments(double m10, double m01, double m02, double m11);

/// E[min(X1/X2, cap)] by an outer Gauss-Legendre rule over the log of X2
/// and the closed-form conditional log-normal capped expectation inside.
double capped_ratio_expectation(const BivariateLogNormalFit& f, double cap);

/// Log-normal call value E[(X - k)+].
double lognormal_call(const LogNormalFit& f, double k);

}  // namespace volmom
