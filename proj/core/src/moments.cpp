#include "volmom/moments.hpp"

#include <cmath>
#include <ostream>

namespace volmom {

namespace {

// Ordered product of per-interval deformed propagators over the whole grid.
Eigen::MatrixXd deformed_propagator(const TimeGrid& grid, const PathFunctional& phi, double eps,
                                    const ExpOptions& opts) {
    const int n = grid.states();
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
    for (size_t k = 0; k < grid.intervals.size(); ++k) {
        const auto& iv = grid.intervals[k];
        p = p * fast_exponentiate(deform(iv.entries, phi.values[k], eps), iv.span(), opts);
    }
    return p;
}

Eigen::MatrixXd deformed_propagator2(const TimeGrid& grid, const PathFunctional& phi,
                                     const PathFunctional& psi, double e1, double e2,
                                     const ExpOptions& opts) {
    const int n = grid.states();
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(n, n);
    for (size_t k = 0; k < grid.intervals.size(); ++k) {
        const auto& iv = grid.intervals[k];
        Eigen::MatrixXd d = iv.entries;
        d.diagonal() += e1 * phi.values[k] + e2 * psi.values[k];
        p = p * fast_exponentiate(d, iv.span(), opts);
    }
    return p;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& raw, const Eigen::VectorXd& transition,
                          double floor) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(raw.size());
    for (int i = 0; i < raw.size(); ++i)
        if (transition(i) > floor) out(i) = raw(i) / transition(i);
    return out;
}

void check_finite(const Eigen::VectorXd& v, const char* what) {
    if (!v.allFinite()) throw std::runtime_error(std::string("non-finite stencil output: ") + what);
}

// Block upper-bidiagonal augmented generator: (order+1) copies of L on the
// diagonal, diag(phi) on the superdiagonal. The (0,k) block of its
// exponential is the k-th time-ordered Dyson integral, i.e. raw moment / k!.
Eigen::MatrixXd augmented_exponential(const GeneratorMatrix& iv, const Eigen::VectorXd& phi,
                                      int order, const ExpOptions& opts) {
    const int n = iv.size();
    const int m = order + 1;
    Eigen::MatrixXd big = Eigen::MatrixXd::Zero(n * m, n * m);
    for (int b = 0; b < m; ++b) {
        big.block(b * n, b * n, n, n) = iv.entries;
        if (b + 1 < m) big.block(b * n, (b + 1) * n, n, n).diagonal() = phi;
    }
    return fast_exponentiate(big, iv.span(), opts);
}

}  // namespace

BridgeMoments moments_fd(const TimeGrid& grid, const PathFunctional& phi, int order, int source,
                         MomentOptions opts) {
    if (order < 1 || order > 3) throw std::invalid_argument("moment order must be 1..3");
    if (phi.values.size() != grid.intervals.size())
        throw std::invalid_argument("functional/interval count mismatch");
    const int n = grid.states();
    if (source < 0 || source >= n) throw std::invalid_argument("source state out of range");

    BridgeMoments m;
    m.t0 = grid.t0();
    m.t1 = grid.t1();
    m.source = source;
    m.order = order;
    m.transitionFloor = opts.transitionFloor;

    const Eigen::MatrixXd p0 = deformed_propagator(grid, phi, 0.0, opts.expOpts);
    m.transition = p0.row(source);

    const double scale = phi.maxAbs() * grid.span();
    if (scale == 0.0) {
        for (int k = 0; k < order; ++k) {
            m.raw.emplace_back(Eigen::VectorXd::Zero(n));
            m.normalized.emplace_back(Eigen::VectorXd::Zero(n));
        }
        return m;
    }
    const double eps = opts.epsBase / scale;

    const Eigen::MatrixXd pPlus = deformed_propagator(grid, phi, eps, opts.expOpts);
    const Eigen::MatrixXd pMinus = deformed_propagator(grid, phi, -eps, opts.expOpts);

    m.raw.emplace_back((pPlus.row(source) - pMinus.row(source)) / (2.0 * eps));
    if (order >= 2)
        m.raw.emplace_back(
            (pPlus.row(source) - 2.0 * p0.row(source) + pMinus.row(source)) / (eps * eps));
    if (order >= 3) {
        const Eigen::MatrixXd p2Plus = deformed_propagator(grid, phi, 2.0 * eps, opts.expOpts);
        const Eigen::MatrixXd p2Minus = deformed_propagator(grid, phi, -2.0 * eps, opts.expOpts);
        m.raw.emplace_back((p2Plus.row(source) - 2.0 * pPlus.row(source) +
                            2.0 * pMinus.row(source) - p2Minus.row(source)) /
                           (2.0 * eps * eps * eps));
    }
    for (int k = 0; k < order; ++k) {
        check_finite(m.raw[static_cast<size_t>(k)], "moments_fd");
        m.normalized.push_back(
            normalize(m.raw[static_cast<size_t>(k)], m.transition, opts.transitionFloor));
    }
    return m;
}

BridgeMoments moments_exact(const TimeGrid& grid, const PathFunctional& phi, int order,
                            int source, ExpOptions opts) {
    if (order < 1 || order > 3) throw std::invalid_argument("moment order must be 1..3");
    if (phi.values.size() != grid.intervals.size())
        throw std::invalid_argument("functional/interval count mismatch");
    const int n = grid.states();
    const int m = order + 1;

    Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(n * m, n * m);
    for (size_t k = 0; k < grid.intervals.size(); ++k)
        prod = prod * augmented_exponential(grid.intervals[k], phi.values[k], order, opts);

    BridgeMoments out;
    out.t0 = grid.t0();
    out.t1 = grid.t1();
    out.source = source;
    out.order = order;
    out.transition = prod.block(0, 0, n, n).row(source);

    double factorial = 1.0;
    for (int k = 1; k <= order; ++k) {
        factorial *= k;
        out.raw.emplace_back(factorial * prod.block(0, k * n, n, n).row(source));
        out.normalized.push_back(
            normalize(out.raw.back(), out.transition, out.transitionFloor));
    }
    return out;
}

BivariateBridgeMoments bivariate_moments(const TimeGrid& grid, const PathFunctional& phi,
                                         const PathFunctional& psi, int source,
                                         MomentOptions opts) {
    if (phi.values.size() != grid.intervals.size() || psi.values.size() != grid.intervals.size())
        throw std::invalid_argument("functional/interval count mismatch");
    if (phi.corridor && psi.corridor &&
        (phi.corridor->lo != psi.corridor->lo || phi.corridor->hi != psi.corridor->hi))
        throw std::invalid_argument("bivariate moments: mismatched corridors");
    const int n = grid.states();

    BivariateBridgeMoments m;
    m.t0 = grid.t0();
    m.t1 = grid.t1();
    m.source = source;
    m.transitionFloor = opts.transitionFloor;

    const double span = grid.span();
    const double s1 = phi.maxAbs() * span;
    const double s2 = psi.maxAbs() * span;
    const double e1 = s1 > 0.0 ? opts.epsBase / s1 : 0.0;
    const double e2 = s2 > 0.0 ? opts.epsBase / s2 : 0.0;

    const Eigen::MatrixXd p00 = deformed_propagator2(grid, phi, psi, 0.0, 0.0, opts.expOpts);
    m.transition = p00.row(source);

    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(n);
    auto univariate = [&](const PathFunctional& f, double e, Eigen::VectorXd& m1,
                          Eigen::VectorXd& m2) {
        if (e == 0.0) {
            m1 = zero;
            m2 = zero;
            return;
        }
        const Eigen::MatrixXd pp = deformed_propagator(grid, f, e, opts.expOpts);
        const Eigen::MatrixXd pm = deformed_propagator(grid, f, -e, opts.expOpts);
        m1 = (pp.row(source) - pm.row(source)) / (2.0 * e);
        m2 = (pp.row(source) - 2.0 * p00.row(source) + pm.row(source)) / (e * e);
    };
    univariate(phi, e1, m.m10, m.m20);
    univariate(psi, e2, m.m01, m.m02);

    if (e1 == 0.0 || e2 == 0.0) {
        m.m11 = zero;
    } else {
        const Eigen::MatrixXd ppp = deformed_propagator2(grid, phi, psi, e1, e2, opts.expOpts);
        const Eigen::MatrixXd ppm = deformed_propagator2(grid, phi, psi, e1, -e2, opts.expOpts);
        const Eigen::MatrixXd pmp = deformed_propagator2(grid, phi, psi, -e1, e2, opts.expOpts);
        const Eigen::MatrixXd pmm = deformed_propagator2(grid, phi, psi, -e1, -e2, opts.expOpts);
        m.m11 = (ppp.row(source) - ppm.row(source) - pmp.row(source) + pmm.row(source)) /
                (4.0 * e1 * e2);
    }
    for (const auto* v : {&m.m10, &m.m01, &m.m20, &m.m02, &m.m11})
        check_finite(*v, "bivariate_moments");

    m.n10 = normalize(m.m10, m.transition, opts.transitionFloor);
    m.n01 = normalize(m.m01, m.transition, opts.transitionFloor);
    m.n20 = normalize(m.m20, m.transition, opts.transitionFloor);
    m.n02 = normalize(m.m02, m.transition, opts.transitionFloor);
    m.n11 = normalize(m.m11, m.transition, opts.transitionFloor);
    return m;
}

BivariateBridgeMoments bivariate_moments_exact(const TimeGrid& grid, const PathFunctional& phi,
                                               const PathFunctional& psi, int source,
                                               ExpOptions opts) {
    const int n = grid.states();
    const BridgeMoments a = moments_exact(grid, phi, 2, source, opts);
    const BridgeMoments b = moments_exact(grid, psi, 2, source, opts);

    // E[I1 I2] as the sum of the two time orderings, via three-block
    // augmented generators with phi and psi on the two superdiagonals.
    auto ordered = [&](const PathFunctional& f, const PathFunctional& g) {
        Eigen::MatrixXd prod = Eigen::MatrixXd::Identity(3 * n, 3 * n);
        for (size_t k = 0; k < grid.intervals.size(); ++k) {
            const auto& iv = grid.intervals[k];
            Eigen::MatrixXd big = Eigen::MatrixXd::Zero(3 * n, 3 * n);
            for (int blk = 0; blk < 3; ++blk) big.block(blk * n, blk * n, n, n) = iv.entries;
            big.block(0, n, n, n).diagonal() = f.values[k];
            big.block(n, 2 * n, n, n).diagonal() = g.values[k];
            prod = prod * fast_exponentiate(big, iv.span(), opts);
        }
        return Eigen::VectorXd(prod.block(0, 2 * n, n, n).row(source));
    };

    BivariateBridgeMoments m;
    m.t0 = grid.t0();
    m.t1 = grid.t1();
    m.source = source;
    m.transition = a.transition;
    m.m10 = a.raw[0];
    m.m20 = a.raw[1];
    m.m01 = b.raw[0];
    m.m02 = b.raw[1];
    m.m11 = ordered(phi, psi) + ordered(psi, phi);
    m.n10 = normalize(m.m10, m.transition, m.transitionFloor);
    m.n01 = normalize(m.m01, m.transition, m.transitionFloor);
    m.n20 = normalize(m.m20, m.transition, m.transitionFloor);
    m.n02 = normalize(m.m02, m.transition, m.transitionFloor);
    m.n11 = normalize(m.m11, m.transition, m.transitionFloor);
    return m;
}

void write_moments_csv(std::ostream& os, const BridgeMoments& m, const Lattice& lat,
                       const StockGrid& grid) {
    os << "y2,x,a,b,S,U";
    for (int k = 1; k <= m.order; ++k) os << ",m" << k;
    for (int k = 1; k <= m.order; ++k) os << ",norm_m" << k;
    os << "\n";
    char buf[32];
    auto fmt = [&](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (int i = 0; i < m.transition.size(); ++i) {
        const LatticeState y = lat.unflatten(i);
        os << i << ',' << y.x << ',' << to_string(y.a) << ',' << to_string(y.b) << ','
           << fmt(grid.price(y.x)) << ',' << fmt(m.transition(i));
        for (int k = 0; k < m.order; ++k) os << ',' << fmt(m.raw[static_cast<size_t>(k)](i));
        for (int k = 0; k < m.order; ++k)
            os << ',' << fmt(m.normalized[static_cast<size_t>(k)](i));
        os << "\n";
    }
}

}  // namespace volmom
