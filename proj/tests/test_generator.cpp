#include <doctest.h>

#include <cmath>

#include "test_util.hpp"
#include "volmom/generator.hpp"
#include "volmom/propagator.hpp"
#include "volmom/quadrature.hpp"

using namespace volmom;

namespace {

GeneratorMatrix assemble(int nx, double r, const ModelConfig& cfg = {}, double t1 = 0.25) {
    Lattice lat;
    lat.nx = nx;
    const StockGrid grid = build_stock_grid(nx, 100.0, {});
    const RateCurve rates{{30.0}, {r}};
    return calibrate_and_assemble(lat, grid, cfg, rates, 0.0, t1);
}

}  // namespace

TEST_CASE("assembled generator passes validation on the default parameters") {
    Lattice lat;
    lat.nx = 20;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    const RateCurve rates{{30.0}, {0.0}};
    const GeneratorMatrix g = calibrate_and_assemble(lat, grid, {}, rates, 0.0, 0.25);
    const ValidationReport report = validate_generator(g, lat, grid, rates);
    INFO(report.text());
    CHECK(report.pass());
    CHECK(report.maxOffDiagonalNegativity == 0.0);
    CHECK(report.maxAbsRowSum <= 1e-12);
}

TEST_CASE("row sums vanish exactly by construction") {
    const GeneratorMatrix g = assemble(20, 0.03);
    for (int i = 0; i < g.size(); ++i)
        CHECK(std::abs(g.entries.row(i).sum()) <= 1e-12);
}

TEST_CASE("negative-outlook rows jump down with mean log size near the target") {
    Lattice lat;
    lat.nx = 70;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    ModelConfig cfg;
    const JumpOperators ops = build_jump_operators(lat, grid, cfg);

    const int x = grid.spotIndex;
    const int row = lat.flatten({x, Outlook::Negative, VolRegime::Medium});
    double num = 0.0, den = 0.0;
    for (int xp = 0; xp < x; ++xp) {
        const int col = lat.flatten({xp, Outlook::Negative, VolRegime::Medium});
        num += ops.outlook(row, col) * (grid.logPrice(xp) - grid.logPrice(x));
        den += ops.outlook(row, col);
    }
    REQUIRE(den > 0.0);
    CHECK(num / den == doctest::Approx(-cfg.negJumpSize).epsilon(0.10));
    // No upward price jumps in the negative outlook.
    for (int xp = x + 1; xp < lat.nx; ++xp)
        CHECK(ops.outlook(row, lat.flatten({xp, Outlook::Negative, VolRegime::Medium})) ==
              0.0);
}

TEST_CASE("price-jump operator vanishes when all jump intensities are zero") {
    // The outlook operator also carries the outlook switches, whose rates are
    // independent intensities; they must be zeroed too for a zero operator.
    Lattice lat;
    lat.nx = 20;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    ModelConfig cfg;
    cfg.jumpIntensity = 0.0;
    cfg.outlookSwitch = {0.0, 0.0};
    const JumpOperators ops = build_jump_operators(lat, grid, cfg);
    CHECK(ops.outlook.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("price-jump entries scale linearly in the jump intensity") {
    Lattice lat;
    lat.nx = 20;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    ModelConfig cfg;
    cfg.outlookSwitch = {0.0, 0.0};  // switch rates are separate intensities
    const JumpOperators one = build_jump_operators(lat, grid, cfg);
    cfg.jumpIntensity = 2.0;
    const JumpOperators two = build_jump_operators(lat, grid, cfg);
    CHECK((two.outlook - 2.0 * one.outlook).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("x = 0 is absorbing for the price-jump operator") {
    Lattice lat;
    lat.nx = 20;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    const JumpOperators ops = build_jump_operators(lat, grid, {});
    for (int ia = 0; ia < 2; ++ia)
        for (int ib = 0; ib < 3; ++ib) {
            const int row =
                lat.flatten({0, static_cast<Outlook>(ia), static_cast<VolRegime>(ib)});
            // No price-jump exits; only the diagonal-in-x outlook switch remains.
            for (int j = 0; j < lat.size(); ++j) {
                const LatticeState dst = lat.unflatten(j);
                if (dst.x != 0) CHECK(ops.outlook(row, j) == 0.0);
            }
        }
}

TEST_CASE("bucketed variance-gamma jumps preserve the configured variance rate") {
    Lattice lat;
    lat.nx = 70;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    ModelConfig cfg;
    const JumpOperators ops = build_jump_operators(lat, grid, cfg);

    for (VolRegime b : {VolRegime::Low, VolRegime::Medium, VolRegime::High}) {
        const double mult = cfg.volMultiplier(b);
        const double sigma2 = cfg.vgVarianceRate * mult * mult;  // beta == 1
        // Independent check of the target itself: second moment of the
        // variance-gamma Levy density exp(-a|z|)/(kappa |z|) integrated
        // numerically.
        const double a = std::sqrt(2.0 / cfg.vgGammaVariance) / (std::sqrt(sigma2));
        const double oracle = gauss_legendre_integrate(
            [&](double z) { return 2.0 * z * std::exp(-a * z) / cfg.vgGammaVariance; }, 0.0,
            4.0, 400);
        CHECK(oracle == doctest::Approx(sigma2).epsilon(1e-8));

        const int row = lat.flatten({grid.spotIndex, Outlook::Stable, b});
        double sum = ops.foldedLogVariance(row);
        for (int j = 0; j < lat.size(); ++j) {
            if (j == row) continue;
            const LatticeState dst = lat.unflatten(j);
            const double dz = grid.logPrice(dst.x) - grid.logPrice(grid.spotIndex);
            sum += ops.vg(row, j) * dz * dz;
        }
        CHECK(sum == doctest::Approx(oracle).epsilon(0.05));
    }
}

TEST_CASE("volatility regime switching is adjacent-only") {
    ModelConfig cfg;
    const Eigen::Matrix3d v = vol_switch_matrix(cfg);
    CHECK(v(0, 2) == 0.0);
    CHECK(v(2, 0) == 0.0);
    for (int i = 0; i < 3; ++i) CHECK(std::abs(v.row(i).sum()) <= 1e-15);

    cfg.volSwitch = {0.0, 0.0, 0.0, 0.0};
    CHECK(vol_switch_matrix(cfg).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("unit switch rates have the uniform stationary distribution") {
    ModelConfig cfg;
    cfg.volSwitch = {1.0, 1.0, 1.0, 1.0};
    const Eigen::Matrix3d v = vol_switch_matrix(cfg);
    const Eigen::RowVector3d pi(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0);
    CHECK((pi * v).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("regime switching commutes with operators diagonal in the vol regime") {
    Lattice lat;
    lat.nx = 4;
    const Eigen::MatrixXd v = build_regime_switch_operator(lat, {});
    std::mt19937 rng(7);
    const Eigen::MatrixXd m = testutil::random_generator(2 * lat.nx, rng);
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(lat.size(), lat.size());
    for (int b = 0; b < 3; ++b)
        block.block(2 * lat.nx * b, 2 * lat.nx * b, 2 * lat.nx, 2 * lat.nx) = m;
    CHECK((v * block - block * v).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("pure-diffusion calibration keeps the drift equation exact") {
    ModelConfig cfg;
    cfg.jumpIntensity = 0.0;
    cfg.stableJumpSize = 0.0;
    cfg.vgVarianceRate = 0.0;
    cfg.outlookSwitch = {0.0, 0.0};
    cfg.localVolatility = 0.2;

    Lattice lat;
    lat.nx = 20;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    const RateCurve rates{{30.0}, {0.0}};
    const GeneratorMatrix g = calibrate_and_assemble(lat, grid, cfg, rates, 0.0, 1.0);
    const ValidationReport report = validate_generator(g, lat, grid, rates);
    INFO(report.text());
    CHECK(report.maxRelativeDriftResidual <= 1e-12);
    // r == 0 on a log-uniform grid: the two tridiagonal legs balance.
    const int i = lat.flatten({grid.spotIndex, Outlook::Stable, VolRegime::Medium});
    const double up = g.entries(i, i + 1) * (grid.price(grid.spotIndex + 1) -
                                             grid.price(grid.spotIndex));
    const double dn = g.entries(i, i - 1) * (grid.price(grid.spotIndex - 1) -
                                             grid.price(grid.spotIndex));
    CHECK(up == doctest::Approx(-dn).epsilon(1e-12));
}

TEST_CASE("one-year propagation reproduces the forward price") {
    Lattice lat;
    lat.nx = 20;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    const RateCurve rates{{30.0}, {0.05}};
    const GeneratorMatrix g = calibrate_and_assemble(lat, grid, {}, rates, 0.0, 1.0);
    const Propagator u = fast_exponentiate(g);

    const int y1 = lat.flatten({grid.spotIndex, Outlook::Stable, VolRegime::Medium});
    double fwd = 0.0;
    for (int j = 0; j < lat.size(); ++j)
        fwd += u.entries(y1, j) * grid.price(lat.unflatten(j).x);
    CHECK(fwd == doctest::Approx(grid.spotPrice() * std::exp(0.05)).epsilon(1e-3));
}

TEST_CASE("validation flags a negative off-diagonal entry with its location") {
    Lattice lat;
    lat.nx = 10;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    const RateCurve rates{{30.0}, {0.0}};
    GeneratorMatrix g = calibrate_and_assemble(lat, grid, {}, rates, 0.0, 0.25);
    g.entries(3, 5) = -0.1;
    const ValidationReport report = validate_generator(g, lat, grid, rates);
    CHECK_FALSE(report.positivityPass());
    CHECK(report.maxOffDiagonalNegativity == doctest::Approx(0.1));
    CHECK(report.worstOffDiagonalRow == 3);
    CHECK(report.worstOffDiagonalCol == 5);
}

TEST_CASE("zero generator validates positivity and conservation, fails drift") {
    Lattice lat;
    lat.nx = 10;
    const StockGrid grid = build_stock_grid(lat.nx, 100.0, {});
    GeneratorMatrix g;
    g.entries = Eigen::MatrixXd::Zero(lat.size(), lat.size());
    g.t0 = 0.0;
    g.t1 = 1.0;

    const ValidationReport zeroRate =
        validate_generator(g, lat, grid, RateCurve{{30.0}, {0.0}});
    CHECK(zeroRate.pass());
    const ValidationReport posRate =
        validate_generator(g, lat, grid, RateCurve{{30.0}, {0.05}});
    CHECK(posRate.positivityPass());
    CHECK(posRate.conservationPass());
    CHECK_FALSE(posRate.driftPass());
}
