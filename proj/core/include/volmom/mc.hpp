#pragma once

#include <cstdint>
#include <vector>

#include "volmom/functional.hpp"
#include "volmom/pricers.hpp"

namespace volmom {

struct McEstimate {
    double mean = 0.0;
    double se = 0.0;  ///< sample stdev / sqrt(paths)
    long paths = 0;
    std::uint64_t seed = 0;
};

struct SimulatedPath {
    std::vector<double> jumpTimes;
    std::vector<int> states;            ///< visited states, starting state first
    std::vector<double> integrals;      ///< int phi ds per registered functional
    double squaredReturnSum = 0.0;      ///< sum of log^2(S'/S) over jumps
    int terminalState = 0;
};

/// Precomputed jump kernels for exact event-driven simulation.
class McSampler {
  public:
    McSampler(const TimeGrid& grid, const StockGrid& stock, const Lattice& lat);

    /// Exact CTMC trajectory: exponential holding times at rate -L(y,y),
    /// capped at interval boundaries, destinations from L(y,y')/(-L(y,y)).
    SimulatedPath simulate(int y1, const std::vector<const PathFunctional*>& functionals,
                           std::uint64_t seed, std::uint64_t pathIndex) const;

    const TimeGrid& grid() const { return *grid_; }

  private:
    const TimeGrid* grid_;
    std::vector<double> logPrices_;  ///< per flattened state
    // Per interval: exit rates and cumulative jump kernels per state.
    std::vector<Eigen::VectorXd> exitRates_;
    std::vector<Eigen::MatrixXd> cumulative_;
};

struct McMoments {
    std::vector<McEstimate> unconditional;  ///< index n-1 holds E[I^n]
    Eigen::MatrixXd binnedRaw;              ///< (order, y2): E[I^n 1(y_t = y2)]
    Eigen::VectorXd terminalCounts;
};

McMoments estimate_moments(const TimeGrid& grid, const StockGrid& stock, const Lattice& lat,
                           const PathFunctional& phi, int y1, int order, long n,
                           std::uint64_t seed);

struct McBivariate {
    McEstimate m10, m01, m20, m02, m11;
};

McBivariate estimate_bivariate(const TimeGrid& grid, const StockGrid& stock, const Lattice& lat,
                               const PathFunctional& phi, const PathFunctional& psi, int y1,
                               long n, std::uint64_t seed);

struct McPriceResult {
    McEstimate estimate;
    double excludedMass = 0.0;  ///< fraction of paths dropped (zero time in range)
    /// For variance-swap kinds: same payoff evaluated on the discrete sum of
    /// squared jump returns instead of the compensator integral.
    McEstimate discreteEstimate;
};

McPriceResult estimate_price(const Model& model, const ContractSpec& spec, long n,
                             std::uint64_t seed, const EngineOptions& opts = {});

}  // namespace volmom
