#include "volmom/functional.hpp"

#include <cmath>

namespace volmom {

double PathFunctional::maxAbs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

PathFunctional build_functional(FunctionalKind kind, const TimeGrid& grid, const Lattice& lat,
                                const StockGrid& stock, std::optional<Corridor> corridor,
                                FunctionalOptions opts) {
    const bool needsCorridor =
        kind == FunctionalKind::CorridorVariance || kind == FunctionalKind::Occupation;
    if (needsCorridor && !corridor)
        throw std::invalid_argument("corridor required for this functional kind");
    if (corridor && !(corridor->lo < corridor->hi))
        throw std::invalid_argument("corridor must have lo < hi");
    if (corridor && corridor->lo >= stock.prices.back())
        throw std::invalid_argument("corridor lies above the grid span");

    PathFunctional f;
    f.kind = kind;
    f.corridor = corridor;
    f.values.reserve(grid.intervals.size());

    const int n = lat.size();
    for (const auto& iv : grid.intervals) {
        Eigen::VectorXd phi = Eigen::VectorXd::Zero(n);
        for (int i = 0; i < n; ++i) {
            const LatticeState y = lat.unflatten(i);
            const double s = stock.price(y.x);
            if (kind == FunctionalKind::Occupation) {
                phi(i) = corridor->contains(s) ? 1.0 : 0.0;
                continue;
            }
            if (kind == FunctionalKind::CorridorVariance && !opts.destinationIndicator &&
                !corridor->contains(s))
                continue;
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const double rate = iv.entries(i, j);
                if (rate == 0.0) continue;
                const double sp = stock.price(lat.unflatten(j).x);
                if (sp == s) continue;
                if (kind == FunctionalKind::CorridorVariance && opts.destinationIndicator &&
                    !corridor->contains(sp))
                    continue;
                const double lr = std::log(sp / s);
                double term = rate * lr * lr;
                if (kind == FunctionalKind::Gamma && !opts.gammaUnitWeight) term *= sp / s;
                acc += term;
            }
            if (kind == FunctionalKind::Gamma && opts.gammaSpotWeight)
                acc *= s / stock.spotPrice();
            phi(i) = acc;
        }
        f.values.push_back(std::move(phi));
    }
    return f;
}

Eigen::MatrixXd deform(const Eigen::MatrixXd& L, const Eigen::VectorXd& phi, double eps) {
    Eigen::MatrixXd d = L;
    d.diagonal() += eps * phi;
    return d;
}

}  // namespace volmom
