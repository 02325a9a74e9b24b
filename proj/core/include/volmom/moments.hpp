#pragma once

#include <iosfwd>

#include "volmom/functional.hpp"

namespace volmom {

struct MomentOptions {
    double epsBase = 1e-2;         ///< scaled by 1 / (max|phi| * span)
    double transitionFloor = 1e-12;
    ExpOptions expOpts;
};

/// Bridge-conditional moments of a path integral: raw[n-1][y2] is
/// E[ I^n delta(y_t - y2) | y_T = y1 ], normalized[n-1][y2] divides by the
/// transition probability where it exceeds the floor.
struct BridgeMoments {
    double t0 = 0.0, t1 = 0.0;
    int source = 0;
    int order = 0;
    double transitionFloor = 1e-12;
    Eigen::VectorXd transition;
    std::vector<Eigen::VectorXd> raw;
    std::vector<Eigen::VectorXd> normalized;

    double span() const { return t1 - t0; }
};

/// Central finite-difference moments from epsilon-deformed propagators.
BridgeMoments moments_fd(const TimeGrid& grid, const PathFunctional& phi, int order, int source,
                         MomentOptions opts = {});

/// Exact time-ordered moments from the block upper-bidiagonal augmented
/// generator (L on the diagonal blocks, diag(phi) above), exponentiated by
/// the same squaring kernel; the top-right block times order! is the moment.
BridgeMoments moments_exact(const TimeGrid& grid, const PathFunctional& phi, int order,
                            int source, ExpOptions opts = {});

/// Mixed moments of the pair (corridor variance, occupation time).
struct BivariateBridgeMoments {
    double t0 = 0.0, t1 = 0.0;
    int source = 0;
    double transitionFloor = 1e-12;
    Eigen::VectorXd transition;
    Eigen::VectorXd m10, m01, m20, m02, m11;                ///< raw
    Eigen::VectorXd n10, n01, n20, n02, n11;                ///< normalized

    double span() const { return t1 - t0; }
};

BivariateBridgeMoments bivariate_moments(const TimeGrid& grid, const PathFunctional& phi,
                                         const PathFunctional& psi, int source,
                                         MomentOptions opts = {});

/// Exact counterpart via two-functional augmented blocks.
BivariateBridgeMoments bivariate_moments_exact(const TimeGrid& grid, const PathFunctional& phi,
                                               const PathFunctional& psi, int source,
                                               ExpOptions opts = {});

/// Columns: y2, x, a, b, U, m1..m3, norm_m1..norm_m3 (absent orders blank).
void write_moments_csv(std::ostream& os, const BridgeMoments& m, const Lattice& lat,
                       const StockGrid& grid);

}  // namespace volmom
