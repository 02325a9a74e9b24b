#pragma once

namespace volmom {

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a),
/// series expansion for x < a + 1 and continued fraction otherwise.
double regularized_gamma_p(double a, double x);

/// Q(a, x) = 1 - P(a, x).
double regularized_gamma_q(double a, double x);

/// Standard normal CDF.
double normal_cdf(double x);

/// Chi-square CDF with a degrees of freedom: P(a/2, x/2).
double chi_square_cdf(double a, double x);

}  // namespace volmom
