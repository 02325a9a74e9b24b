#pragma once

#include <optional>
#include <string>
#include <vector>

#include "volmom/lattice.hpp"

namespace volmom {

/// Finite-activity (outlook) and variance-gamma jump operators on the
/// flattened state space, plus the sub-grid jump mass folded into the
/// local diffusion target.
struct JumpOperators {
    Eigen::MatrixXd outlook;  ///< price jumps and outlook switches, zero row sums
    Eigen::MatrixXd vg;       ///< bucketed variance-gamma jumps, zero row sums
    /// Log-price variance of jumps below the truncation, per state. Picked up
    /// by calibrate_and_assemble as part of the tridiagonal variance target.
    Eigen::VectorXd foldedLogVariance;
};

JumpOperators build_jump_operators(const Lattice& lat, const StockGrid& grid,
                                   const ModelConfig& cfg);

/// 3x3 rate matrix on {low, medium, high}; low<->high entries are zero.
Eigen::Matrix3d vol_switch_matrix(const ModelConfig& cfg);

/// The 3x3 switch matrix applied diagonally in (x, a).
Eigen::MatrixXd build_regime_switch_operator(const Lattice& lat, const ModelConfig& cfg);

GeneratorMatrix calibrate_and_assemble(const Lattice& lat, const StockGrid& grid,
                                       const ModelConfig& cfg, const RateCurve& rates,
                                       double t0, double t1);

struct ValidationTolerances {
    double offDiagonal = 0.0;
    double rowSum = 1e-12;
    double driftRelative = 1e-6;
};

struct ValidationReport {
    double maxOffDiagonalNegativity = 0.0;  ///< most negative off-diagonal entry, as a magnitude
    double maxAbsRowSum = 0.0;
    double maxRelativeDriftResidual = 0.0;  ///< max |sum L (S'-S) - r S| / S over checked nodes
    int worstOffDiagonalRow = -1, worstOffDiagonalCol = -1;
    int worstRowSumRow = -1;
    int worstDriftState = -1;
    std::vector<int> skippedBoundaryStates;  ///< absorbing/boundary nodes excluded from the drift check
    ValidationTolerances tolerances;

    bool positivityPass() const { return maxOffDiagonalNegativity <= tolerances.offDiagonal; }
    bool conservationPass() const { return maxAbsRowSum <= tolerances.rowSum; }
    bool driftPass() const { return maxRelativeDriftResidual <= tolerances.driftRelative; }
    bool pass() const { return positivityPass() && conservationPass() && driftPass(); }

    std::string text() const;
    std::string toJson() const;
};

ValidationReport validate_generator(const GeneratorMatrix& L, const Lattice& lat,
                                    const StockGrid& grid, const RateCurve& rates,
                                    ValidationTolerances tol = {});

}  // namespace volmom
