#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "volmom/distributions.hpp"
#include "volmom/model.hpp"
#include "volmom/moments.hpp"

namespace volmom {

enum class ContractKind {
    VarianceSwap,
    VolatilitySwap,
    CorridorVarianceSwap,
    ConditionalVarianceSwap,
    GammaSwap,
    RvOption,
    VarianceKnockout,
};

std::string to_string(ContractKind k);
ContractKind contract_kind_from_string(const std::string& s);

enum class FitFamily { ChiSquare, LogNormal, Pearson3 };

std::string to_string(FitFamily f);
FitFamily fit_family_from_string(const std::string& s);

struct ContractSpec {
    ContractKind kind = ContractKind::VarianceSwap;
    std::string name;
    double issuance = 0.0;            ///< T, years
    double maturity = 1.0;            ///< t, years
    double capFactor = 6.2;           ///< f in the capped payoff
    bool uncappedOnly = false;        ///< skip the capped leg entirely
    std::optional<double> explicitCap;  ///< cap on RV (or on the ratio), overrides capFactor
    std::optional<Corridor> corridor;
    double strike = 0.0;              ///< K: variance units for rvOption, price units for knockout
    double barrier = 0.0;             ///< H, volatility units, for knockouts
    FitFamily fitFamily = FitFamily::ChiSquare;

    double span() const { return maturity - issuance; }
    void validate() const;
};

struct BridgeRow {
    int y2 = 0;
    double weight = 0.0;     ///< U(y1, y2)
    std::string fit;         ///< fit family actually used (after fallbacks)
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;  ///< fitted parameters
    double payoff = 0.0;     ///< bridge payoff before weighting
};

struct PriceReport {
    std::string contract;
    ContractKind kind = ContractKind::VarianceSwap;
    double headline = 0.0;       ///< swap rate (volatility units) or price (currency)
    double uncappedRate = 0.0;   ///< swap rate without the cap, where meaningful
    double cappedRate = 0.0;
    double capLevel = 0.0;       ///< RV_max (or ratio cap) actually applied
    std::vector<BridgeRow> breakdown;
    double skippedMass = 0.0;    ///< transition mass of skipped bridges
    int fallbackCount = 0;
    double sumCheck = 0.0;       ///< re-summation target: sum of weight * payoff

    std::string toJson() const;
    void writeCsv(std::ostream& os) const;
};

struct EngineOptions {
    double epsBase = 1e-2;
    double transitionFloor = 1e-12;
    double occupationFloorFactor = 1e-6;  ///< conditional swaps skip bridges with m01 below factor * span
    bool literalRvMax = false;            ///< use the propagator-weighted m2 cap formula literally
    bool destinationIndicator = false;
    bool gammaSpotWeight = false;
    bool gammaUnitWeight = false;
    bool useRootFinder = false;           ///< solve the equilibrium rate by bisection
    ExpOptions expOpts;
};

PriceReport price_variance_swap(const Model& model, const ContractSpec& spec,
                                const EngineOptions& opts = {});
PriceReport price_volatility_swap(const Model& model, const ContractSpec& spec,
                                  const EngineOptions& opts = {});
PriceReport price_corridor_variance_swap(const Model& model, const ContractSpec& spec,
                                         const EngineOptions& opts = {});
PriceReport price_conditional_variance_swap(const Model& model, const ContractSpec& spec,
                                            const EngineOptions& opts = {});
PriceReport price_gamma_swap(const Model& model, const ContractSpec& spec,
                             const EngineOptions& opts = {});
PriceReport price_rv_option(const Model& model, const ContractSpec& spec,
                            const EngineOptions& opts = {});
PriceReport price_variance_knockout(const Model& model, const ContractSpec& spec,
                                    const EngineOptions& opts = {});

PriceReport price_contract(const Model& model, const ContractSpec& spec,
                           const EngineOptions& opts = {});

}  // namespace volmom
