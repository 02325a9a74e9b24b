#include "volmom/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace volmom {

std::string to_string(Outlook a) { return a == Outlook::Stable ? "stable" : "negative"; }

std::string to_string(VolRegime b) {
    switch (b) {
        case VolRegime::Low: return "low";
        case VolRegime::Medium: return "medium";
        default: return "high";
    }
}

Outlook outlook_from_string(const std::string& s) {
    if (s == "stable") return Outlook::Stable;
    if (s == "negative") return Outlook::Negative;
    throw std::invalid_argument("unknown outlook regime: " + s);
}

VolRegime vol_regime_from_string(const std::string& s) {
    if (s == "low") return VolRegime::Low;
    if (s == "medium") return VolRegime::Medium;
    if (s == "high") return VolRegime::High;
    throw std::invalid_argument("unknown volatility regime: " + s);
}

double BetaCurve::operator()(double s) const {
    if (prices.empty()) return 1.0;
    if (s <= prices.front()) return values.front();
    if (s >= prices.back()) return values.back();
    const auto it = std::upper_bound(prices.begin(), prices.end(), s);
    const size_t i = static_cast<size_t>(it - prices.begin());
    const double w = (s - prices[i - 1]) / (prices[i] - prices[i - 1]);
    return values[i - 1] * (1.0 - w) + values[i] * w;
}

void BetaCurve::validate() const {
    if (prices.size() != values.size())
        throw std::invalid_argument("beta curve: price and value counts differ");
    if (!std::is_sorted(prices.begin(), prices.end()))
        throw std::invalid_argument("beta curve: prices must be increasing");
    for (double v : values)
        if (v < 0.0 || v > 2.0)
            throw std::invalid_argument("beta curve: values must lie in [0, 2]");
}

double StockGrid::volScale(int x) const {
    const double s = price(x);
    return std::pow(s, beta(s) - 1.0);
}

StockGrid build_stock_grid(int nx, double spot, const GridSpec& spec, BetaCurve beta) {
    if (nx < 3) throw std::invalid_argument("stock grid needs at least 3 nodes");
    if (!(spec.sMin > 0.0) || !(spec.sMax > spec.sMin))
        throw std::invalid_argument("stock grid span must satisfy 0 < sMin < sMax");
    if (spot < spec.sMin || spot > spec.sMax)
        throw std::invalid_argument("spot lies outside the grid span");
    beta.validate();

    StockGrid g;
    g.beta = std::move(beta);
    g.requestedSpot = spot;
    g.prices.resize(static_cast<size_t>(nx));
    g.logPrices.resize(static_cast<size_t>(nx));
    const double l0 = std::log(spec.sMin);
    const double step = (std::log(spec.sMax) - l0) / (nx - 1);
    for (int x = 0; x < nx; ++x) {
        g.logPrices[static_cast<size_t>(x)] = l0 + step * x;
        g.prices[static_cast<size_t>(x)] = std::exp(g.logPrices[static_cast<size_t>(x)]);
    }
    g.prices.front() = spec.sMin;
    g.prices.back() = spec.sMax;

    const double logSpot = std::log(spot);
    int best = 0;
    for (int x = 1; x < nx; ++x)
        if (std::abs(g.logPrices[static_cast<size_t>(x)] - logSpot) <
            std::abs(g.logPrices[static_cast<size_t>(best)] - logSpot))
            best = x;
    g.spotIndex = best;
    return g;
}

void RateCurve::validate() const {
    if (times.empty() || times.size() != rates.size())
        throw std::invalid_argument("rate curve: need matching, non-empty times and rates");
    double prev = 0.0;
    for (double t : times) {
        if (t <= prev) throw std::invalid_argument("rate curve: times must be increasing");
        prev = t;
    }
}

double RateCurve::rate(double t) const {
    for (size_t i = 0; i < times.size(); ++i)
        if (t < times[i]) return rates[i];
    if (!times.empty() && t <= times.back() * (1.0 + 1e-12)) return rates.back();
    throw std::out_of_range("rate curve: time beyond horizon");
}

double RateCurve::discount(double t) const {
    double acc = 0.0;
    double prev = 0.0;
    for (size_t i = 0; i < times.size() && prev < t; ++i) {
        const double hi = std::min(times[i], t);
        acc += rates[i] * (hi - prev);
        prev = hi;
    }
    if (prev < t - 1e-12) throw std::out_of_range("rate curve: time beyond horizon");
    return std::exp(-acc);
}

std::vector<double> RateCurve::breakpoints(double t0, double t1) const {
    if (t0 > t1) throw std::invalid_argument("rate curve: t0 > t1");
    std::vector<double> pts{t0};
    for (double t : times)
        if (t > t0 + 1e-12 && t < t1 - 1e-12) pts.push_back(t);
    pts.push_back(t1);
    return pts;
}

void ModelConfig::validate() const {
    auto nonneg = [](double v, const char* name) {
        if (v < 0.0) throw std::invalid_argument(std::string(name) + " must be non-negative");
    };
    nonneg(negJumpSize, "negJumpSize");
    nonneg(stableJumpSize, "stableJumpSize");
    nonneg(jumpIntensity, "jumpIntensity");
    nonneg(vgVarianceRate, "vgVarianceRate");
    nonneg(localVolatility, "localVolatility");
    nonneg(smallJumpTruncation, "smallJumpTruncation");
    if (vgGammaVariance <= 0.0)
        throw std::invalid_argument("vgGammaVariance must be positive");
    if (negJumpSize >= 1.0) throw std::invalid_argument("negJumpSize must be below 1");
    nonneg(volSwitch.lowToMed, "volSwitch.lowToMed");
    nonneg(volSwitch.medToLow, "volSwitch.medToLow");
    nonneg(volSwitch.medToHigh, "volSwitch.medToHigh");
    nonneg(volSwitch.highToMed, "volSwitch.highToMed");
    nonneg(outlookSwitch.stableToNegative, "outlookSwitch.stableToNegative");
    nonneg(outlookSwitch.negativeToStable, "outlookSwitch.negativeToStable");
    if (!(regimeVolMultipliers[0] < regimeVolMultipliers[1] &&
          regimeVolMultipliers[1] < regimeVolMultipliers[2]))
        throw std::invalid_argument("regimeVolMultipliers must be strictly increasing");
    for (double m : regimeVolMultipliers) nonneg(m, "regimeVolMultipliers");
}

}  // namespace volmom
