#pragma once

#include <iosfwd>
#include <vector>

#include "volmom/lattice.hpp"

namespace volmom {

/// Elementary step choice for one generator interval: the largest dyadic
/// subdivision dt = span / 2^n with min_y (1 + dt L(y,y)) >= 1/2.
struct StepChoice {
    double dt = 0.0;
    int doublings = 0;
};

StepChoice choose_step(const Eigen::MatrixXd& L, double span);

/// u = I + dt L. Throws if the stability condition fails.
Eigen::MatrixXd elementary_step(const Eigen::MatrixXd& L, double dt);

struct ExpOptions {
    /// Target on the accumulated first-order step error; refines the
    /// subdivision beyond the stability minimum of choose_step.
    double accuracyTarget = 1e-9;
    /// When >= 0, use exactly this many squarings (testing hook).
    int forcedDoublings = -1;
};

/// Transition-probability matrix over [t0, t1].
struct Propagator {
    Eigen::MatrixXd entries;
    double t0 = 0.0;
    double t1 = 0.0;

    int size() const { return static_cast<int>(entries.rows()); }
    /// Entries with negative roundoff clamped to zero.
    Eigen::MatrixXd clamped() const;
};

Eigen::MatrixXd fast_exponentiate(const Eigen::MatrixXd& L, double span, ExpOptions opts = {});
Propagator fast_exponentiate(const GeneratorMatrix& L, ExpOptions opts = {});

/// Ordered piecewise-constant generator intervals covering one span.
struct TimeGrid {
    std::vector<GeneratorMatrix> intervals;
    std::vector<StepChoice> steps;

    double t0() const { return intervals.front().t0; }
    double t1() const { return intervals.back().t1; }
    double span() const { return t1() - t0(); }
    int states() const { return intervals.front().size(); }
    void validate() const;
};

TimeGrid make_time_grid(std::vector<GeneratorMatrix> intervals);

/// Ordered product of per-interval propagators over [t1, t2]. Both times
/// must be interval boundaries of the grid.
Propagator compose(const TimeGrid& grid, double t1, double t2, ExpOptions opts = {});

/// Binary cache format: magic "VMPR", uint32 state count, double t0, t1,
/// then row-major doubles, little-endian.
void save_propagator(std::ostream& os, const Propagator& u);
Propagator load_propagator(std::istream& is);

}  // namespace volmom
