#pragma once

#include <functional>
#include <vector>

namespace volmom {

struct GaussLegendreRule {
    std::vector<double> nodes;    ///< on [-1, 1]
    std::vector<double> weights;
};

/// Nodes by Newton iteration on the Legendre polynomial; cached per order.
const GaussLegendreRule& gauss_legendre(int n);

/// Integrate f over [a, b] with an n-point rule.
double gauss_legendre_integrate(const std::function<double(double)>& f, double a, double b,
                                int n);

}  // namespace volmom
