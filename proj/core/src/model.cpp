#include "volmom/model.hpp"

#include <cmath>
#include <stdexcept>

namespace volmom {

const GeneratorMatrix& Model::generatorAt(double t) const {
    for (const auto& g : generators)
        if (t >= g.t0 - 1e-12 && t < g.t1 - 1e-12) return g;
    if (!generators.empty() && std::abs(t - generators.back().t1) <= 1e-12)
        return generators.back();
    throw std::out_of_range("model: time beyond generator horizon");
}

TimeGrid Model::timeGrid(double t0, double t1) const {
    if (!(t1 > t0)) throw std::invalid_argument("model: need t0 < t1");
    std::vector<GeneratorMatrix> slices;
    for (double bp : rates.breakpoints(t0, t1)) {
        if (!slices.empty()) slices.back().t1 = bp;
        if (bp < t1 - 1e-12) {
            GeneratorMatrix g = generatorAt(bp);
            g.t0 = bp;
            slices.push_back(std::move(g));
        }
    }
    return make_time_grid(std::move(slices));
}

Model build_model(const Lattice& lat, const StockGrid& grid, const ModelConfig& cfg,
                  const RateCurve& rates, Outlook initialOutlook, VolRegime initialVol) {
    if (grid.size() != lat.nx) throw std::invalid_argument("model: grid/lattice size mismatch");
    cfg.validate();
    rates.validate();

    Model m;
    m.lattice = lat;
    m.grid = grid;
    m.cfg = cfg;
    m.rates = rates;
    m.initialState = lat.flatten({grid.spotIndex, initialOutlook, initialVol});

    double prev = 0.0;
    for (double t : rates.times) {
        GeneratorMatrix g = calibrate_and_assemble(lat, grid, cfg, rates, prev, t);
        const ValidationReport report = validate_generator(g, lat, grid, rates);
        if (!report.pass())
            throw std::runtime_error("model: generator validation failed\n" + report.text());
        m.generators.push_back(std::move(g));
        prev = t;
    }
    return m;
}

}  // namespace volmom
