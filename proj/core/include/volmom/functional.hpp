#pragma once

#include <optional>

#include "volmom/lattice.hpp"
#include "volmom/propagator.hpp"

namespace volmom {

enum class FunctionalKind { Variance, CorridorVariance, Occupation, Gamma };

struct Corridor {
    double lo = 0.0;
    double hi = 0.0;

    bool contains(double s) const { return lo < s && s < hi; }
};

struct FunctionalOptions {
    /// Apply the corridor indicator to the jump destination price instead of
    /// the source price.
    bool destinationIndicator = false;
    /// Force the gamma weight S'/S to one (reduces gamma to plain variance).
    bool gammaUnitWeight = false;
    /// Multiply the gamma functional by S(y)/S0 (discrete-payoff weighting).
    bool gammaSpotWeight = false;
};

/// Per-interval state table phi(y) of a path integral I = int phi(y_s) ds.
struct PathFunctional {
    FunctionalKind kind = FunctionalKind::Variance;
    std::vector<Eigen::VectorXd> values;  ///< one table per TimeGrid interval
    std::optional<Corridor> corridor;

    double maxAbs() const;
};

PathFunctional build_functional(FunctionalKind kind, const TimeGrid& grid, const Lattice& lat,
                                const StockGrid& stock, std::optional<Corridor> corridor = {},
                                FunctionalOptions opts = {});

/// L + eps * diag(phi). Not a probability generator: rows need not sum to 0.
Eigen::MatrixXd deform(const Eigen::MatrixXd& L, const Eigen::VectorXd& phi, double eps);

}  // namespace volmom
