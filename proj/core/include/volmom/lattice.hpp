#pragma once

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace volmom {

/// Slow two-state drift regime of the 3-factor model.
enum class Outlook : int { Stable = 0, Negative = 1 };

/// Mean-reverting three-state volatility regime.
enum class VolRegime : int { Low = 0, Medium = 1, High = 2 };

std::string to_string(Outlook a);
std::string to_string(VolRegime b);
Outlook outlook_from_string(const std::string& s);
VolRegime vol_regime_from_string(const std::string& s);

struct LatticeState {
    int x = 0;
    Outlook a = Outlook::Stable;
    VolRegime b = VolRegime::Medium;
};

/// The (x, a, b) state space. States are flattened as
/// x + nx * (idx(a) + 2 * idx(b)), a bijection onto 0 .. 6*nx-1.
struct Lattice {
    int nx = 70;

    int size() const { return 6 * nx; }

    int flatten(const LatticeState& y) const {
        return y.x + nx * (static_cast<int>(y.a) + 2 * static_cast<int>(y.b));
    }
    LatticeState unflatten(int i) const {
        LatticeState y;
        y.x = i % nx;
        const int r = i / nx;
        y.a = static_cast<Outlook>(r % 2);
        y.b = static_cast<VolRegime>(r / 2);
        return y;
    }
};

/// Piecewise-linear volatility exponent curve beta(S), values in [0, 2].
/// An empty node list means beta == 1 everywhere.
struct BetaCurve {
    std::vector<double> prices;
    std::vector<double> values;

    double operator()(double s) const;
    void validate() const;
};

struct GridSpec {
    double sMin = 10.0;
    double sMax = 1000.0;
};

/// Log-spaced price grid with the spot snapped to the nearest node.
struct StockGrid {
    std::vector<double> prices;
    std::vector<double> logPrices;
    int spotIndex = 0;
    double requestedSpot = 0.0;
    BetaCurve beta;

    int size() const { return static_cast<int>(prices.size()); }
    double price(int x) const { return prices[static_cast<size_t>(x)]; }
    double logPrice(int x) const { return logPrices[static_cast<size_t>(x)]; }
    double spotPrice() const { return prices[static_cast<size_t>(spotIndex)]; }
    /// Local volatility scale S^(beta(S)-1) at node x.
    double volScale(int x) const;
};

StockGrid build_stock_grid(int nx, double spot, const GridSpec& spec, BetaCurve beta = {});

/// Deterministic piecewise-constant short rate. times[i] is the right
/// endpoint of interval i; the first interval starts at 0.
struct RateCurve {
    std::vector<double> times;
    std::vector<double> rates;

    void validate() const;
    double horizon() const { return times.empty() ? 0.0 : times.back(); }
    double rate(double t) const;
    /// exp(-int_0^t r)
    double discount(double t) const;
    double discount(double t0, double t1) const { return discount(t1) / discount(t0); }
    /// Breakpoints of [t0, t1] split at rate intervals.
    std::vector<double> breakpoints(double t0, double t1) const;
};

struct OutlookSwitchRates {
    double stableToNegative = 0.3;
    double negativeToStable = 1.5;
};

struct VolSwitchRates {
    double lowToMed = 2.0;
    double medToLow = 3.0;
    double medToHigh = 1.0;
    double highToMed = 4.0;
};

struct ModelConfig {
    double negJumpSize = 0.12;      ///< mean relative down-jump in negative outlook
    double stableJumpSize = 0.02;   ///< symmetric jump size in stable outlook
    double jumpIntensity = 1.0;     ///< finite-activity jump arrival rate, 1/years
    double vgVarianceRate = 0.04;   ///< variance-gamma quadratic variation rate
    double vgGammaVariance = 0.25;  ///< variance of the gamma time change
    double localVolatility = 0.0;   ///< extra diffusive volatility on top of the VG small-jump mass
    double smallJumpTruncation = 0.0;  ///< log-price cutoff; 0 selects the home-bucket half width
    std::array<double, 3> regimeVolMultipliers{0.7, 1.0, 1.5};
    VolSwitchRates volSwitch;
    OutlookSwitchRates outlookSwitch;
    bool jointOutlookJumps = true;  ///< outlook switches carry the destination-regime jump profile

    void validate() const;
    double volMultiplier(VolRegime b) const {
        return regimeVolMultipliers[static_cast<size_t>(b)];
    }
};

/// Dense transition-rate matrix over flattened states, valid on [t0, t1).
struct GeneratorMatrix {
    Eigen::MatrixXd entries;
    double t0 = 0.0;
    double t1 = 0.0;

    double span() const { return t1 - t0; }
    int size() const { return static_cast<int>(entries.rows()); }
};

}  // namespace volmom
