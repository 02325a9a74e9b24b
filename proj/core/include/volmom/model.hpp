#pragma once

#include "volmom/generator.hpp"
#include "volmom/propagator.hpp"

namespace volmom {

/// Built model: the lattice, one validated generator per rate interval and
/// the initial state. Immutable after construction.
struct Model {
    Lattice lattice;
    StockGrid grid;
    ModelConfig cfg;
    RateCurve rates;
    std::vector<GeneratorMatrix> generators;
    int initialState = 0;

    const GeneratorMatrix& generatorAt(double t) const;
    /// Intervals covering [t0, t1], split at rate breakpoints.
    TimeGrid timeGrid(double t0, double t1) const;
};

Model build_model(const Lattice& lat, const StockGrid& grid, const ModelConfig& cfg,
                  const RateCurve& rates, Outlook initialOutlook = Outlook::Stable,
                  VolRegime initialVol = VolRegime::Medium);

}  // namespace volmom
