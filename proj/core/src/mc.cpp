#include "volmom/mc.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace volmom {

namespace {

constexpr double kIdleRate = 1e-14;  ///< below this the state is treated as absorbing

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t pathIndex) {
    // splitmix64 of the pair, so each path owns an independent stream.
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (pathIndex + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return std::mt19937_64(z);
}

struct Welford {
    long n = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++n;
        const double d = x - mean;
        mean += d / n;
        m2 += d * (x - mean);
    }
    McEstimate estimate(std::uint64_t seed) const {
        McEstimate e;
        e.mean = mean;
        e.se = n > 1 ? std::sqrt(m2 / (n - 1.0) / n) : 0.0;
        e.paths = n;
        e.seed = seed;
        return e;
    }
};

}  // namespace

McSampler::McSampler(const TimeGrid& grid, const StockGrid& stock, const Lattice& lat)
    : grid_(&grid) {
    const int n = grid.states();
    logPrices_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        logPrices_[static_cast<size_t>(i)] = stock.logPrice(lat.unflatten(i).x);

    exitRates_.reserve(grid.intervals.size());
    cumulative_.reserve(grid.intervals.size());
    for (const auto& iv : grid.intervals) {
        Eigen::VectorXd exit = Eigen::VectorXd::Zero(n);
        Eigen::MatrixXd cum = Eigen::MatrixXd::Zero(n, n);
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) {
                if (j != i) acc += std::max(iv.entries(i, j), 0.0);
                cum(i, j) = acc;
            }
            exit(i) = acc;
            if (acc > 0.0) cum.row(i) /= acc;
        }
        exitRates_.push_back(std::move(exit));
        cumulative_.push_back(std::move(cum));
    }
}

SimulatedPath McSampler::simulate(int y1, const std::vector<const PathFunctional*>& functionals,
                                  std::uint64_t seed, std::uint64_t pathIndex) const {
    std::mt19937_64 rng = path_rng(seed, pathIndex);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SimulatedPath path;
    path.states.push_back(y1);
    path.integrals.assign(functionals.size(), 0.0);

    int state = y1;
    for (size_t k = 0; k < grid_->intervals.size(); ++k) {
        const auto& iv = grid_->intervals[k];
        double t = iv.t0;
        while (t < iv.t1) {
            const double rate = exitRates_[k](state);
            double hold = iv.t1 - t;
            bool jumps = false;
            if (rate > kIdleRate) {
                const double drawn = -std::log(1.0 - unif(rng)) / rate;
                if (drawn < hold) {
                    hold = drawn;
                    jumps = true;
                }
            }
            for (size_t f = 0; f < functionals.size(); ++f)
                path.integrals[f] += functionals[f]->values[k](state) * hold;
            t += hold;
            if (!jumps) break;

            const double u = unif(rng);
            const auto row = cumulative_[k].row(state);
            int lo = 0, hi = static_cast<int>(row.size()) - 1;
            while (lo < hi) {
                const int mid = (lo + hi) / 2;
                (row(mid) < u ? lo : hi) = (row(mid) < u ? mid + 1 : mid);
            }
            const double dl = logPrices_[static_cast<size_t>(lo)] -
                              logPrices_[static_cast<size_t>(state)];
            path.squaredReturnSum += dl * dl;
            path.jumpTimes.push_back(t);
            path.states.push_back(lo);
            state = lo;
        }
    }
    path.terminalState = state;
    return path;
}

McMoments estimate_moments(const TimeGrid& grid, const StockGrid& stock, const Lattice& lat,
                           const PathFunctional& phi, int y1, int order, long n,
                           std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("estimate_moments: need at least one path");
    const McSampler sampler(grid, stock, lat);
    const int states = grid.states();

    McMoments out;
    out.binnedRaw = Eigen::MatrixXd::Zero(order, states);
    out.terminalCounts = Eigen::VectorXd::Zero(states);
    std::vector<Welford> acc(static_cast<size_t>(order));

    for (long p = 0; p < n; ++p) {
        const SimulatedPath path =
            sampler.simulate(y1, {&phi}, seed, static_cast<std::uint64_t>(p));
        double power = 1.0;
        for (int k = 0; k < order; ++k) {
            power *= path.integrals[0];
            acc[static_cast<size_t>(k)].add(power);
            out.binnedRaw(k, path.terminalState) += power;
        }
        out.terminalCounts(path.terminalState) += 1.0;
    }
    out.binnedRaw /= static_cast<double>(n);
    for (int k = 0; k < order; ++k)
        out.unconditional.push_back(acc[static_cast<size_t>(k)].estimate(seed));
    return out;
}

McBivariate estimate_bivariate(const TimeGrid& grid, const StockGrid& stock, const Lattice& lat,
                               const PathFunctional& phi, const PathFunctional& psi, int y1,
                               long n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("estimate_bivariate: need at least one path");
    const McSampler sampler(grid, stock, lat);
    Welford w10, w01, w20, w02, w11;
    for (long p = 0; p < n; ++p) {
        const SimulatedPath path =
            sampler.simulate(y1, {&phi, &psi}, seed, static_cast<std::uint64_t>(p));
        const double i1 = path.integrals[0];
        const double i2 = path.integrals[1];
        w10.add(i1);
        w01.add(i2);
        w20.add(i1 * i1);
        w02.add(i2 * i2);
        w11.add(i1 * i2);
    }
    McBivariate out;
    out.m10 = w10.estimate(seed);
    out.m01 = w01.estimate(seed);
    out.m20 = w20.estimate(seed);
    out.m02 = w02.estimate(seed);
    out.m11 = w11.estimate(seed);
    return out;
}

McPriceResult estimate_price(const Model& model, const ContractSpec& spec, long n,
                             std::uint64_t seed, const EngineOptions& opts) {
    spec.validate();
    const TimeGrid grid = model.timeGrid(spec.issuance, spec.maturity);
    const double span = spec.span();
    const double discount = model.rates.discount(spec.issuance, spec.maturity);

    FunctionalOptions fopts;
    fopts.destinationIndicator = opts.destinationIndicator;
    fopts.gammaUnitWeight = opts.gammaUnitWeight;
    fopts.gammaSpotWeight = opts.gammaSpotWeight;

    FunctionalKind fkind = FunctionalKind::Variance;
    if (spec.kind == ContractKind::CorridorVarianceSwap ||
        spec.kind == ContractKind::ConditionalVarianceSwap)
        fkind = FunctionalKind::CorridorVariance;
    else if (spec.kind == ContractKind::GammaSwap)
        fkind = FunctionalKind::Gamma;

    const PathFunctional phi =
        build_functional(fkind, grid, model.lattice, model.grid, spec.corridor, fopts);
    std::vector<const PathFunctional*> functionals{&phi};
    PathFunctional psi;
    if (spec.kind == ContractKind::ConditionalVarianceSwap) {
        psi = build_functional(FunctionalKind::Occupation, grid, model.lattice, model.grid,
                               spec.corridor);
        functionals.push_back(&psi);
    }

    const McSampler sampler(grid, model.grid, model.lattice);
    Welford payoff, discretePayoff;
    long excluded = 0;

    for (long p = 0; p < n; ++p) {
        const SimulatedPath path =
            sampler.simulate(model.initialState, functionals, seed,
                             static_cast<std::uint64_t>(p));
        const double rv = path.integrals[0] / span;
        switch (spec.kind) {
            case ContractKind::VarianceSwap:
            case ContractKind::CorridorVarianceSwap:
            case ContractKind::GammaSwap:
                payoff.add(rv);
                discretePayoff.add(path.squaredReturnSum / span);
                break;
            case ContractKind::VolatilitySwap:
                payoff.add(std::sqrt(std::max(rv, 0.0)));
                break;
            case ContractKind::ConditionalVarianceSwap: {
                const double timeIn = path.integrals[1];
                if (timeIn <= 0.0) {
                    ++excluded;
                } else {
                    payoff.add(path.integrals[0] / timeIn);
                }
                break;
            }
            case ContractKind::RvOption:
                payoff.add(discount * std::max(rv - spec.strike, 0.0));
                break;
            default: {  // VarianceKnockout
                const double terminalPrice =
                    model.grid.price(model.lattice.unflatten(path.terminalState).x);
                const double call = std::max(discount * terminalPrice - spec.strike, 0.0);
                payoff.add(rv < spec.barrier * spec.barrier ? call : 0.0);
                break;
            }
        }
    }

    McPriceResult out;
    out.estimate = payoff.estimate(seed);
    out.discreteEstimate = discretePayoff.n > 0 ? discretePayoff.estimate(seed) : McEstimate{};
    out.excludedMass = static_cast<double>(excluded) / static_cast<double>(n);
    return out;
}

}  // namespace volmom
