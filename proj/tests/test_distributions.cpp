#include <doctest.h>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>
#include <random>

#include "volmom/distributions.hpp"
#include "volmom/special_functions.hpp"

using namespace volmom;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double integrate(const std::function<double(double)>& f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-12);
}

double chi_density(const ChiSquareFit& f, double x) {
    // Density of scale * chi2(a) at x.
    const double z = x / f.scale;
    return std::exp((f.a / 2.0 - 1.0) * std::log(z) - z / 2.0 -
                    std::lgamma(f.a / 2.0) - (f.a / 2.0) * std::log(2.0)) /
           f.scale;
}

double lognormal_density(const LogNormalFit& f, double x) {
    const double z = (std::log(x) - f.mu) / f.sigma;
    return std::exp(-0.5 * z * z) / (x * f.sigma * std::sqrt(2.0 * M_PI));
}

double pearson_density(const PearsonIIIFit& f, double x) {
    if (x <= f.a) return 0.0;
    const double z = (x - f.a) / f.b;
    return std::exp((f.p - 1.0) * std::log(z) - z - std::lgamma(f.p)) / f.b;
}

struct Sampler {
    double sum = 0.0, sum2 = 0.0;
    long n = 0;
    void add(double x) {
        sum += x;
        sum2 += x * x;
        ++n;
    }
    double mean() const { return sum / n; }
    double se() const {
        const double var = (sum2 - sum * sum / n) / (n - 1.0);
        return std::sqrt(var / n);
    }
};

}  // namespace

TEST_CASE("chi-square fit pins the first two moments") {
    const ChiSquareFit one = fit_chi_square(1.0, 3.0);
    CHECK(one.a == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(one.scale == doctest::Approx(1.0).epsilon(1e-12));

    const ChiSquareFit four = fit_chi_square(4.0, 24.0);
    CHECK(four.a == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(four.scale == doctest::Approx(1.0).epsilon(1e-12));
    // Quadrature of x and x^2 against the recovered density.
    const double m1 = integrate([&](double x) { return x * chi_density(four, x); }, 0.0, 400.0);
    const double m2 =
        integrate([&](double x) { return x * x * chi_density(four, x); }, 0.0, 400.0);
    CHECK(m1 == doctest::Approx(4.0).epsilon(1e-8));
    CHECK(m2 == doctest::Approx(24.0).epsilon(1e-8));

    CHECK_THROWS_AS(fit_chi_square(2.0, 4.0), ZeroVarianceError);
    CHECK_THROWS_AS(fit_chi_square(-1.0, 3.0), ZeroVarianceError);
}

TEST_CASE("log-normal fit pins the first two moments") {
    const LogNormalFit f = fit_lognormal(1.0, std::exp(1.0));
    CHECK(f.mu == doctest::Approx(-0.5).epsilon(1e-12));
    CHECK(f.sigma == doctest::Approx(1.0).epsilon(1e-12));
    const double m1 =
        integrate([&](double x) { return x * lognormal_density(f, x); }, 1e-12, 2000.0);
    CHECK(m1 == doctest::Approx(1.0).epsilon(1e-8));

    const LogNormalFit rt = fit_lognormal(std::exp(0.125), std::exp(0.5));
    CHECK(rt.mu == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(rt.sigma == doctest::Approx(0.5).epsilon(1e-10));

    CHECK_THROWS_AS(fit_lognormal(1.0, 1.0 + 1e-13), ZeroVarianceError);
}

TEST_CASE("Pearson III fit solves the three moment equations") {
    const PearsonIIIFit cs = fit_pearson3(2.0, 8.0, 48.0);
    CHECK(cs.a == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(cs.b == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(cs.p == doctest::Approx(1.0).epsilon(1e-10));

    // Round trip a=1, b=0.5, p=4; forward moments are (3, 10, 37).
    const double a = 1.0, b = 0.5, p = 4.0;
    const double m1 = a + b * p;
    const double m2 = m1 * m1 + b * b * p;
    const double m3 = a * a * a + 3.0 * a * a * b * p + 3.0 * a * b * b * p * (p + 1.0) +
                      b * b * b * p * (p + 1.0) * (p + 2.0);
    CHECK(m3 == doctest::Approx(37.0));
    const PearsonIIIFit rt = fit_pearson3(m1, m2, m3);
    CHECK(rt.a == doctest::Approx(a).epsilon(1e-9));
    CHECK(rt.b == doctest::Approx(b).epsilon(1e-9));
    CHECK(rt.p == doctest::Approx(p).epsilon(1e-9));

    CHECK_THROWS_AS(fit_pearson3(0.0, 1.0, 0.0), NonPositiveSkewError);
    CHECK_THROWS_AS(fit_pearson3(1.0, 1.0, 5.0), ZeroVarianceError);
}

TEST_CASE("bivariate log-normal fit recovers the correlation") {
    const BivariateLogNormalFit ind =
        fit_bivariate_lognormal(1.0, 3.0, 2.0, 5.0, 2.0);  // m11 = m10*m01
    CHECK(ind.rho == doctest::Approx(0.0).epsilon(1e-12));

    const BivariateLogNormalFit same = fit_bivariate_lognormal(1.0, 3.0, 1.0, 3.0, 3.0);
    CHECK(same.rho == doctest::Approx(1.0).epsilon(1e-10));

    // Sampling oracle: correlated normals at rho = 0.4.
    std::mt19937_64 rng(77);
    std::normal_distribution<double> norm;
    const double mu1 = -1.0, s1 = 0.5, mu2 = 0.2, s2 = 0.3, rho = 0.4;
    double e10 = 0, e20 = 0, e01 = 0, e02 = 0, e11 = 0;
    const long n = 1000000;
    for (long i = 0; i < n; ++i) {
        const double z1 = norm(rng);
        const double z2 = rho * z1 + std::sqrt(1.0 - rho * rho) * norm(rng);
        const double x1 = std::exp(mu1 + s1 * z1), x2 = std::exp(mu2 + s2 * z2);
        e10 += x1;
        e20 += x1 * x1;
        e01 += x2;
        e02 += x2 * x2;
        e11 += x1 * x2;
    }
    const BivariateLogNormalFit f =
        fit_bivariate_lognormal(e10 / n, e20 / n, e01 / n, e02 / n, e11 / n);
    CHECK(std::abs(f.rho - rho) <= 0.02);
    CHECK(f.sigma1 == doctest::Approx(s1).epsilon(0.02));
    CHECK(f.sigma2 == doctest::Approx(s2).epsilon(0.02));

    CHECK_THROWS_AS(fit_bivariate_lognormal(1.0, 3.0, 1.0, 3.0, 4.0),
                    CorrelationOutOfRangeError);
    CHECK_THROWS_AS(fit_bivariate_lognormal(1.0, 1.0, 2.0, 5.0, 2.0), ZeroVarianceError);
}

TEST_CASE("capped expectations match quadrature") {
    const ChiSquareFit chi = fit_chi_square(1.0, 3.0);
    // x = u^2 substitution tames the x^(-1/2) endpoint of the a=1 density.
    const double chiOracle = integrate(
        [&](double u) { return std::min(u * u, 1.0) * chi_density(chi, u * u) * 2.0 * u; },
        1e-12, 40.0);
    CHECK(std::abs(capped_expectation(chi, PayoffKind::RV, 1.0) - chiOracle) <= 1e-7);

    const LogNormalFit ln = fit_lognormal(1.0, std::exp(1.0));
    CHECK(ln.mu == doctest::Approx(-0.5));
    // Integrate in y = log x and split at the payoff kink so the adaptive
    // rule converges to full precision.
    const auto lnIntegrand = [&](double y) {
        const double z = (y - ln.mu) / ln.sigma;
        return std::min(std::exp(y / 2.0), 1.0) * std::exp(-0.5 * z * z) /
               (ln.sigma * std::sqrt(2.0 * M_PI));
    };
    const double lnOracle = integrate(lnIntegrand, ln.mu - 40.0 * ln.sigma, 0.0) +
                            integrate(lnIntegrand, 0.0, ln.mu + 40.0 * ln.sigma);
    CHECK(std::abs(capped_expectation(ln, PayoffKind::SqrtRV, 1.0) - lnOracle) <= 1e-7);

    const PearsonIIIFit p3 = fit_pearson3(3.0, 10.0, 37.0);
    const double p3Oracle =
        integrate([&](double x) { return std::min(x, 3.0) * pearson_density(p3, x); },
                  p3.a + 1e-14, 200.0);
    CHECK(std::abs(capped_expectation(p3, PayoffKind::RV, 3.0) - p3Oracle) <= 1e-7);
    CHECK_THROWS_AS(capped_expectation(p3, PayoffKind::SqrtRV, 1.0), UnsupportedPayoffError);
}

TEST_CASE("capped expectations: limits and monotonicity") {
    const ChiSquareFit chi = fit_chi_square(2.0, 7.0);
    const LogNormalFit ln = fit_lognormal(2.0, 7.0);
    const PearsonIIIFit p3 = fit_pearson3(3.0, 10.0, 37.0);

    CHECK(capped_expectation(chi, PayoffKind::RV, kInf) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(capped_expectation(ln, PayoffKind::RV, kInf) == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(capped_expectation(p3, PayoffKind::RV, kInf) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(capped_expectation(chi, PayoffKind::RV, 0.0) == doctest::Approx(0.0));
    CHECK(capped_expectation(ln, PayoffKind::SqrtRV, 0.0) == doctest::Approx(0.0));

    double prev = 0.0;
    for (double cap : {0.5, 1.0, 2.0, 4.0, 8.0, 1e6}) {
        const double v = capped_expectation(chi, PayoffKind::RV, cap);
        CHECK(v >= prev - 1e-12);
        CHECK(v <= std::min(2.0, cap) + 1e-9);
        prev = v;
    }
}

TEST_CASE("cdf evaluations") {
    const ChiSquareFit expo = fit_chi_square(2.0, 8.0);  // a=2, scale=1: exponential, mean 2
    CHECK(expo.a == doctest::Approx(2.0));
    CHECK(expo.scale == doctest::Approx(1.0));
    CHECK(cdf(expo, 0.0) == doctest::Approx(0.0));
    CHECK(cdf(expo, 2.0 * std::log(2.0)) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(cdf(expo, 1e9) == doctest::Approx(1.0));

    const ChiSquareFit chi = fit_chi_square(5.2, 5.2 * 5.2 + 2.0 * 5.2 * 1.3);
    const LogNormalFit ln = fit_lognormal(1.0, std::exp(1.0));
    const PearsonIIIFit p3 = fit_pearson3(3.0, 10.0, 37.0);
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(0.05, 8.0);
    double prevChi = -1.0;
    for (int i = 0; i < 20; ++i) {
        const double x = 0.05 + (8.0 - 0.05) * i / 19.0;
        const double byQuad =
            integrate([&](double t) { return chi_density(chi, t); }, 1e-14, x);
        CHECK(std::abs(cdf(chi, x) - byQuad) <= 1e-9);
        CHECK(cdf(chi, x) >= prevChi);
        prevChi = cdf(chi, x);

        const double xr = u(rng);
        const double lnQuad =
            integrate([&](double t) { return lognormal_density(ln, t); }, 1e-14, xr);
        CHECK(std::abs(cdf(ln, xr) - lnQuad) <= 1e-9);
        const double p3Quad =
            integrate([&](double t) { return pearson_density(p3, t); }, p3.a + 1e-14,
                      p3.a + xr);
        CHECK(std::abs(cdf(p3, p3.a + xr) - p3Quad) <= 1e-9);
    }
}

TEST_CASE("ratio expectation: the two algebraic forms coincide") {
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u(0.1, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double mu1 = -2.0 + u(rng), s1 = u(rng);
        const double mu2 = -0.5 + u(rng), s2 = u(rng);
        const double rho = 2.0 * u(rng) - 1.0;
        const double m10 = std::exp(mu1 + s1 * s1 / 2.0);
        const double m20 = std::exp(2.0 * mu1 + 2.0 * s1 * s1);
        const double m01 = std::exp(mu2 + s2 * s2 / 2.0);
        const double m02 = std::exp(2.0 * mu2 + 2.0 * s2 * s2);
        const double m11 = m10 * m01 * std::exp(rho * s1 * s2);
        const BivariateLogNormalFit f = fit_bivariate_lognormal(m10, m20, m01, m02, m11);
        const double byParams = ratio_expectation(f);
        const double byMoments = ratio_expectation_from_moments(m10, m01, m02, m11);
        CHECK(byParams == doctest::Approx(byMoments).epsilon(1e-10));
    }
    // Deterministic denominator: E[X1/c] = m10/c in the moment form.
    const double c = 2.5;
    CHECK(ratio_expectation_from_moments(0.7, c, c * c, 0.7 * c) ==
          doctest::Approx(0.7 / c).epsilon(1e-12));
}

TEST_CASE("ratio expectation with independent marginals matches sampling") {
    const double mu1 = -0.4, s1 = 0.35, mu2 = 0.0, s2 = 0.25;
    BivariateLogNormalFit f;
    f.mu1 = mu1;
    f.sigma1 = s1;
    f.mu2 = mu2;
    f.sigma2 = s2;
    f.rho = 0.0;
    const double expected = ratio_expectation(f);
    CHECK(expected ==
          doctest::Approx(std::exp(mu1 + s1 * s1 / 2.0) * std::exp(s2 * s2 / 2.0))
              .epsilon(1e-12));

    std::mt19937_64 rng(123);
    std::normal_distribution<double> norm;
    Sampler s;
    for (long i = 0; i < 1000000; ++i) {
        const double x1 = std::exp(mu1 + s1 * norm(rng));
        const double x2 = std::exp(mu2 + s2 * norm(rng));
        s.add(x1 / x2);
    }
    CHECK(std::abs(expected - s.mean()) <= 3.0 * s.se());
}

TEST_CASE("capped ratio expectation") {
    // Parameters shaped like a conditional-variance bridge: mean variance
    // 0.04, mean occupation 1.
    const double s1 = 0.3, s2 = 0.3, rho = 0.5;
    BivariateLogNormalFit f;
    f.sigma1 = s1;
    f.mu1 = std::log(0.04) - s1 * s1 / 2.0;
    f.sigma2 = s2;
    f.mu2 = -s2 * s2 / 2.0;
    f.rho = rho;

    CHECK(capped_ratio_expectation(f, kInf) ==
          doctest::Approx(ratio_expectation(f)).epsilon(1e-6));
    CHECK(capped_ratio_expectation(f, 0.0) == doctest::Approx(0.0));

    const double cap = 0.05;
    const double quad = capped_ratio_expectation(f, cap);
    std::mt19937_64 rng(99);
    std::normal_distribution<double> norm;
    Sampler s;
    for (long i = 0; i < 1000000; ++i) {
        const double z2 = norm(rng);
        const double z1 = rho * z2 + std::sqrt(1.0 - rho * rho) * norm(rng);
        const double x1 = std::exp(f.mu1 + s1 * z1);
        const double x2 = std::exp(f.mu2 + s2 * z2);
        s.add(std::min(x1 / x2, cap));
    }
    CHECK(std::abs(quad - s.mean()) <= 3.0 * s.se());
}

TEST_CASE("log-normal call value") {
    const LogNormalFit f = fit_lognormal(0.04, 0.0020);
    const double k = 0.04;
    // Integrate in y = log x starting at the kink so the rule sees a smooth
    // integrand.
    const double oracle = integrate(
        [&](double y) {
            const double z = (y - f.mu) / f.sigma;
            return (std::exp(y) - k) * std::exp(-0.5 * z * z) /
                   (f.sigma * std::sqrt(2.0 * M_PI));
        },
        std::log(k), f.mu + 40.0 * f.sigma);
    CHECK(std::abs(lognormal_call(f, k) - oracle) <= 1e-7);
    CHECK(lognormal_call(f, 0.0) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(lognormal_call(f, 1e9) == doctest::Approx(0.0));
}
