#include "volmom/generator.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace volmom {

namespace {

// Log-price bucket edges around destination nodes, relative to a source node.
// Bucket k spans the midpoints towards the neighbours; the extreme buckets
// extend to +/- infinity.
struct Buckets {
    std::vector<double> lo, hi;  // per destination index, in absolute log price
};

Buckets make_buckets(const StockGrid& grid) {
    const int nx = grid.size();
    Buckets b;
    b.lo.resize(static_cast<size_t>(nx));
    b.hi.resize(static_cast<size_t>(nx));
    const double inf = std::numeric_limits<double>::infinity();
    for (int x = 0; x < nx; ++x) {
        b.lo[static_cast<size_t>(x)] =
            x == 0 ? -inf : 0.5 * (grid.logPrice(x - 1) + grid.logPrice(x));
        b.hi[static_cast<size_t>(x)] =
            x == nx - 1 ? inf : 0.5 * (grid.logPrice(x) + grid.logPrice(x + 1));
    }
    return b;
}

// Exponential down-jump masses for a source node: probability of landing in
// each destination bucket below x under magnitude density eta*exp(-eta*u).
// Mass below the first bucket edge is assigned to the nearest down node so the
// total intensity is preserved.
std::vector<double> down_jump_masses(const StockGrid& grid, const Buckets& bk, int x,
                                     double eta) {
    std::vector<double> m(static_cast<size_t>(x), 0.0);
    const double l = grid.logPrice(x);
    for (int xp = x - 1; xp >= 0; --xp) {
        const double uLo = xp == x - 1 ? 0.0 : l - bk.hi[static_cast<size_t>(xp)];
        const double uHi = l - bk.lo[static_cast<size_t>(xp)];
        m[static_cast<size_t>(xp)] =
            std::exp(-eta * uLo) - (std::isinf(uHi) ? 0.0 : std::exp(-eta * uHi));
    }
    return m;
}

double down_jump_mean(const StockGrid& grid, const std::vector<double>& m, int x) {
    double num = 0.0, den = 0.0;
    for (int xp = 0; xp < x; ++xp) {
        num += m[static_cast<size_t>(xp)] * (grid.logPrice(xp) - grid.logPrice(x));
        den += m[static_cast<size_t>(xp)];
    }
    return den > 0.0 ? num / den : 0.0;
}

// Calibrate the exponential decay so the discretized mean log displacement
// matches -target. The jump amplitudes are matched on the lattice itself, not
// in the continuum, so the bucketing does not bias the mean.
double calibrate_down_jump_decay(const StockGrid& grid, const Buckets& bk, int x,
                                 double target) {
    double lo = 1e-2, hi = 1e4;
    auto meanAt = [&](double eta) {
        return -down_jump_mean(grid, down_jump_masses(grid, bk, x, eta), x);
    };
    // mean magnitude decreases in eta
    if (meanAt(lo) <= target) return lo;
    if (meanAt(hi) >= target) return hi;
    for (int it = 0; it < 100; ++it) {
        const double mid = std::sqrt(lo * hi);
        if (meanAt(mid) > target)
            lo = mid;
        else
            hi = mid;
    }
    return std::sqrt(lo * hi);
}

// int z^2 k(z) dz over [zLo, zHi], 0 < zLo < zHi, for the symmetric VG Levy
// density k(z) = exp(-a|z|) / (kappa |z|); closed form per side.
double vg_second_moment(double a, double kappa, double zLo, double zHi) {
    auto anti = [&](double z) {
        if (std::isinf(z)) return 0.0;
        return -(z / a + 1.0 / (a * a)) * std::exp(-a * z) / kappa;
    };
    return anti(zHi) - anti(zLo);
}

}  // namespace

Eigen::Matrix3d vol_switch_matrix(const ModelConfig& cfg) {
    Eigen::Matrix3d v = Eigen::Matrix3d::Zero();
    v(0, 1) = cfg.volSwitch.lowToMed;
    v(1, 0) = cfg.volSwitch.medToLow;
    v(1, 2) = cfg.volSwitch.medToHigh;
    v(2, 1) = cfg.volSwitch.highToMed;
    for (int i = 0; i < 3; ++i) v(i, i) = -v.row(i).sum();
    return v;
}

Eigen::MatrixXd build_regime_switch_operator(const Lattice& lat, const ModelConfig& cfg) {
    cfg.validate();
    const Eigen::Matrix3d v = vol_switch_matrix(cfg);
    const int n = lat.size();
    Eigen::MatrixXd op = Eigen::MatrixXd::Zero(n, n);
    for (int i = 0; i < n; ++i) {
        const LatticeState y = lat.unflatten(i);
        for (int bp = 0; bp < 3; ++bp) {
            LatticeState yp = y;
            yp.b = static_cast<VolRegime>(bp);
            op(i, lat.flatten(yp)) = v(static_cast<int>(y.b), bp);
        }
    }
    return op;
}

JumpOperators build_jump_operators(const Lattice& lat, const StockGrid& grid,
                                   const ModelConfig& cfg) {
    cfg.validate();
    const int nx = grid.size();
    if (nx != lat.nx) throw std::invalid_argument("lattice/grid size mismatch");
    const int n = lat.size();
    const double gridSpan = grid.logPrice(nx - 1) - grid.logPrice(0);
    if (cfg.smallJumpTruncation >= gridSpan)
        throw std::invalid_argument("smallJumpTruncation exceeds the grid span");

    const Buckets bk = make_buckets(grid);

    JumpOperators ops;
    ops.outlook = Eigen::MatrixXd::Zero(n, n);
    ops.vg = Eigen::MatrixXd::Zero(n, n);
    ops.foldedLogVariance = Eigen::VectorXd::Zero(n);

    // Down-jump bucket masses per source node, calibrated so the discretized
    // mean log displacement equals -negJumpSize.
    std::vector<std::vector<double>> down(static_cast<size_t>(nx));
    for (int x = 1; x < nx; ++x) {
        const double eta = calibrate_down_jump_decay(grid, bk, x, cfg.negJumpSize);
        down[static_cast<size_t>(x)] = down_jump_masses(grid, bk, x, eta);
    }

    // Symmetric stable-outlook jumps: +/- log(1 + size). Sub-bucket jumps are
    // folded into the diffusion variance target instead of being dropped.
    const double stableLog = std::log1p(cfg.stableJumpSize);

    const double lam = cfg.jumpIntensity;
    for (int ib = 0; ib < 3; ++ib) {
        for (int ia = 0; ia < 2; ++ia) {
            const Outlook a = static_cast<Outlook>(ia);
            for (int x = 1; x < nx; ++x) {
                const LatticeState y{x, a, static_cast<VolRegime>(ib)};
                const int row = lat.flatten(y);

                auto addDown = [&](double rate, Outlook aDest) {
                    if (rate <= 0.0) return;
                    const auto& m = down[static_cast<size_t>(x)];
                    for (int xp = 0; xp < x; ++xp) {
                        if (m[static_cast<size_t>(xp)] <= 0.0) continue;
                        const LatticeState yp{xp, aDest, y.b};
                        ops.outlook(row, lat.flatten(yp)) += rate * m[static_cast<size_t>(xp)];
                    }
                };

                if (a == Outlook::Negative) {
                    addDown(lam, Outlook::Negative);
                } else if (lam > 0.0 && cfg.stableJumpSize > 0.0) {
                    // one jump per side at intensity lambda/2
                    const double halfUp =
                        x < nx - 1 ? 0.5 * (grid.logPrice(x + 1) - grid.logPrice(x)) : 0.0;
                    const double halfDn = 0.5 * (grid.logPrice(x) - grid.logPrice(x - 1));
                    if (x < nx - 1 && stableLog >= halfUp) {
                        int xp = x + 1;
                        while (xp < nx - 1 && grid.logPrice(xp + 1) - grid.logPrice(x) <= stableLog)
                            ++xp;
                        const double z = grid.logPrice(xp) - grid.logPrice(x);
                        const LatticeState yp{xp, a, y.b};
                        // preserve the second moment of the jump
                        ops.outlook(row, lat.flatten(yp)) +=
                            0.5 * lam * stableLog * stableLog / (z * z);
                    } else {
                        ops.foldedLogVariance(row) += 0.5 * lam * stableLog * stableLog;
                    }
                    if (stableLog >= halfDn) {
                        int xp = x - 1;
                        while (xp > 0 && grid.logPrice(x) - grid.logPrice(xp - 1) <= stableLog)
                            --xp;
                        const double z = grid.logPrice(x) - grid.logPrice(xp);
                        const LatticeState yp{xp, a, y.b};
                        ops.outlook(row, lat.flatten(yp)) +=
                            0.5 * lam * stableLog * stableLog / (z * z);
                    } else {
                        ops.foldedLogVariance(row) += 0.5 * lam * stableLog * stableLog;
                    }
                }

                // Outlook switches. Entering the negative regime carries the
                // down-jump profile when jumps and switches are joint.
                const LatticeState other{x, a == Outlook::Stable ? Outlook::Negative
                                                                 : Outlook::Stable,
                                         y.b};
                const double switchRate = a == Outlook::Stable
                                              ? cfg.outlookSwitch.stableToNegative
                                              : cfg.outlookSwitch.negativeToStable;
                if (switchRate > 0.0) {
                    if (cfg.jointOutlookJumps && other.a == Outlook::Negative)
                        addDown(switchRate, Outlook::Negative);
                    else
                        ops.outlook(row, lat.flatten(other)) += switchRate;
                }
            }
        }
    }

    // Variance-gamma buckets, second-moment preserving. The amplitude scale
    // is S^(beta(S)-1) times the regime volatility multiplier.
    const double sigma = std::sqrt(cfg.vgVarianceRate);
    const double kappa = cfg.vgGammaVariance;
    if (cfg.vgVarianceRate > 0.0) {
        const double decay = std::sqrt(2.0 / kappa) / sigma;  // in unscaled amplitude units
        for (int ib = 0; ib < 3; ++ib) {
            const double mult = cfg.regimeVolMultipliers[static_cast<size_t>(ib)];
            for (int x = 0; x < nx; ++x) {
                const double c = grid.volScale(x) * mult;
                if (c <= 0.0) continue;
                const double aDecay = decay / c;  // scaled density exp(-aDecay |z|)/(kappa |z|)
                const double l = grid.logPrice(x);
                const double halfUp =
                    x < nx - 1 ? 0.5 * (grid.logPrice(x + 1) - l)
                               : std::numeric_limits<double>::infinity();
                const double halfDn = x > 0 ? 0.5 * (l - grid.logPrice(x - 1))
                                            : std::numeric_limits<double>::infinity();
                const double foldUp = std::max(cfg.smallJumpTruncation, halfUp);
                const double foldDn = std::max(cfg.smallJumpTruncation, halfDn);

                for (int ia = 0; ia < 2; ++ia) {
                    const LatticeState y{x, static_cast<Outlook>(ia),
                                         static_cast<VolRegime>(ib)};
                    const int row = lat.flatten(y);
                    // folded small-jump variance, both sides
                    double folded = 0.0;
                    if (std::isfinite(foldUp)) folded += vg_second_moment(aDecay, kappa, 0.0, foldUp);
                    if (std::isfinite(foldDn)) folded += vg_second_moment(aDecay, kappa, 0.0, foldDn);
                    ops.foldedLogVariance(row) += folded;

                    for (int xp = 0; xp < nx; ++xp) {
                        if (xp == x) continue;
                        const double zNode = grid.logPrice(xp) - l;
                        const double fold = zNode > 0.0 ? foldUp : foldDn;
                        double zLo = std::abs(zNode > 0.0 ? bk.lo[static_cast<size_t>(xp)] - l
                                                          : l - bk.hi[static_cast<size_t>(xp)]);
                        const double zHi =
                            std::abs(zNode > 0.0 ? bk.hi[static_cast<size_t>(xp)] - l
                                                 : l - bk.lo[static_cast<size_t>(xp)]);
                        if (zHi <= fold) continue;
                        zLo = std::max(zLo, fold);
                        const double i2 = vg_second_moment(aDecay, kappa, zLo, zHi);
                        if (i2 < 0.0)
                            throw std::runtime_error("negative VG bucket mass");
                        if (i2 > 0.0)
                            ops.vg(row, lat.flatten({xp, y.a, y.b})) += i2 / (zNode * zNode);
                    }
                }
            }
        }
    }

    // additional configured diffusion, in log-variance units
    if (cfg.localVolatility > 0.0) {
        for (int i = 0; i < n; ++i) {
            const LatticeState y = lat.unflatten(i);
            const double c = grid.volScale(y.x) * cfg.volMultiplier(y.b);
            ops.foldedLogVariance(i) += cfg.localVolatility * cfg.localVolatility * c * c;
        }
    }

    for (int i = 0; i < n; ++i) {
        ops.outlook(i, i) = 0.0;
        ops.outlook(i, i) = -ops.outlook.row(i).sum();
        ops.vg(i, i) = 0.0;
        ops.vg(i, i) = -ops.vg.row(i).sum();
    }
    return ops;
}

GeneratorMatrix calibrate_and_assemble(const Lattice& lat, const StockGrid& grid,
                                       const ModelConfig& cfg, const RateCurve& rates,
                                       double t0, double t1) {
    if (!(t1 > t0)) throw std::invalid_argument("generator interval must have t1 > t0");
    rates.validate();
    if (t1 > rates.horizon() * (1.0 + 1e-12))
        throw std::out_of_range("generator interval beyond the rate curve horizon");

    const JumpOperators ops = build_jump_operators(lat, grid, cfg);
    const Eigen::MatrixXd vsv = build_regime_switch_operator(lat, cfg);
    const int n = lat.size();
    const int nx = grid.size();
    const double r = rates.rate(0.5 * (t0 + t1));

    Eigen::MatrixXd L = ops.outlook + ops.vg + vsv;
    for (int i = 0; i < n; ++i) L(i, i) = 0.0;  // diagonals rebuilt at the end

    Eigen::VectorXd statePrice(n);
    for (int i = 0; i < n; ++i) statePrice(i) = grid.price(lat.unflatten(i).x);

    for (int i = 0; i < n; ++i) {
        const LatticeState y = lat.unflatten(i);
        const int x = y.x;
        if (x == 0 || x == nx - 1) continue;
        const double s = grid.price(x);

        double jumpDrift = 0.0;
        for (int j = 0; j < n; ++j)
            if (j != i && L(i, j) != 0.0) jumpDrift += L(i, j) * (statePrice(j) - s);

        const double m1 = r * s - jumpDrift;
        const double m2 = ops.foldedLogVariance(i) * s * s;

        const double dUp = grid.price(x + 1) - s;
        const double dDn = grid.price(x - 1) - s;
        const double det = dUp * dDn * (dDn - dUp);
        double lamUp = (m1 * dDn * dDn - m2 * dDn) / det;
        double lamDn = (m2 * dUp - m1 * dUp * dUp) / det;
        // keep the drift equation exact, sacrifice variance first
        if (lamDn < 0.0) {
            lamDn = 0.0;
            lamUp = m1 / dUp;
        } else if (lamUp < 0.0) {
            lamUp = 0.0;
            lamDn = m1 / dDn;
        }
        lamUp = std::max(lamUp, 0.0);
        lamDn = std::max(lamDn, 0.0);

        L(i, lat.flatten({x + 1, y.a, y.b})) += lamUp;
        L(i, lat.flatten({x - 1, y.a, y.b})) += lamDn;
    }

    for (int i = 0; i < n; ++i) L(i, i) = -L.row(i).sum();

    GeneratorMatrix g;
    g.entries = std::move(L);
    g.t0 = t0;
    g.t1 = t1;
    return g;
}

ValidationReport validate_generator(const GeneratorMatrix& L, const Lattice& lat,
                                    const StockGrid& grid, const RateCurve& rates,
                                    ValidationTolerances tol) {
    const int n = L.size();
    const int nx = grid.size();
    ValidationReport rep;
    rep.tolerances = tol;
    const double r = rates.rate(0.5 * (L.t0 + L.t1));

    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            const double neg = -L.entries(i, j);
            if (neg > rep.maxOffDiagonalNegativity) {
                rep.maxOffDiagonalNegativity = neg;
                rep.worstOffDiagonalRow = i;
                rep.worstOffDiagonalCol = j;
            }
        }
        const double rs = std::abs(L.entries.row(i).sum());
        if (rs > rep.maxAbsRowSum) {
            rep.maxAbsRowSum = rs;
            rep.worstRowSumRow = i;
        }
        const LatticeState y = lat.unflatten(i);
        if (y.x == 0 || y.x == nx - 1) {
            rep.skippedBoundaryStates.push_back(i);
            continue;
        }
        const double s = grid.price(y.x);
        double drift = 0.0;
        for (int j = 0; j < n; ++j)
            drift += L.entries(i, j) * (grid.price(lat.unflatten(j).x) - s);
        const double res = std::abs(drift - r * s) / s;
        if (res > rep.maxRelativeDriftResidual) {
            rep.maxRelativeDriftResidual = res;
            rep.worstDriftState = i;
        }
    }
    rep.maxOffDiagonalNegativity = std::max(rep.maxOffDiagonalNegativity, 0.0);
    return rep;
}

std::string ValidationReport::text() const {
    std::ostringstream os;
    os << "generator validation\n";
    os << "  positivity:   max off-diagonal negativity " << maxOffDiagonalNegativity;
    if (worstOffDiagonalRow >= 0)
        os << " at (" << worstOffDiagonalRow << ", " << worstOffDiagonalCol << ")";
    os << " -> " << (positivityPass() ? "pass" : "FAIL") << "\n";
    os << "  conservation: max |row sum| " << maxAbsRowSum;
    if (worstRowSumRow >= 0) os << " at row " << worstRowSumRow;
    os << " -> " << (conservationPass() ? "pass" : "FAIL") << "\n";
    os << "  drift:        max relative residual " << maxRelativeDriftResidual;
    if (worstDriftState >= 0) os << " at state " << worstDriftState;
    os << " -> " << (driftPass() ? "pass" : "FAIL") << "\n";
    os << "  boundary states excluded from the drift check: " << skippedBoundaryStates.size()
       << "\n";
    os << "  overall: " << (pass() ? "PASS" : "FAIL") << "\n";
    return os.str();
}

std::string ValidationReport::toJson() const {
    std::ostringstream os;
    os << "{\"maxOffDiagonalNegativity\":" << maxOffDiagonalNegativity
       << ",\"maxAbsRowSum\":" << maxAbsRowSum
       << ",\"maxRelativeDriftResidual\":" << maxRelativeDriftResidual
       << ",\"positivityPass\":" << (positivityPass() ? "true" : "false")
       << ",\"conservationPass\":" << (conservationPass() ? "true" : "false")
       << ",\"driftPass\":" << (driftPass() ? "true" : "false")
       << ",\"pass\":" << (pass() ? "true" : "false")
       << ",\"excludedBoundaryStates\":" << skippedBoundaryStates.size() << "}";
    return os.str();
}

}  // namespace volmom
