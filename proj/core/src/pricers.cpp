#include "volmom/pricers.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include <json.hpp>

namespace volmom {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

MomentOptions moment_options(const EngineOptions& opts) {
    MomentOptions m;
    m.epsBase = opts.epsBase;
    m.transitionFloor = opts.transitionFloor;
    m.expOpts = opts.expOpts;
    return m;
}

FunctionalOptions functional_options(const EngineOptions& opts) {
    FunctionalOptions f;
    f.destinationIndicator = opts.destinationIndicator;
    f.gammaUnitWeight = opts.gammaUnitWeight;
    f.gammaSpotWeight = opts.gammaSpotWeight;
    return f;
}

struct FitOutcome {
    std::string name;
    double p1 = 0.0, p2 = 0.0, p3 = 0.0;
    double value = 0.0;
};

FitOutcome deterministic_capped(PayoffKind kind, double m1, double cap) {
    FitOutcome o;
    o.name = "deterministic";
    o.p1 = m1;
    const double x = std::max(m1, 0.0);
    o.value = kind == PayoffKind::RV ? std::min(x, cap) : std::min(std::sqrt(x), std::sqrt(cap));
    return o;
}

/// Fit the requested family to annualized conditional moments and evaluate
/// the capped expectation, degrading Pearson -> chi-square -> deterministic
/// as the moments lose definiteness.
FitOutcome capped_with_fallback(FitFamily family, PayoffKind kind, double m1, double m2,
                                double m3, double cap, int& fallbacks) {
    if (!(m1 > 0.0)) return deterministic_capped(kind, m1, cap);
    if (family == FitFamily::Pearson3) {
        try {
            const PearsonIIIFit f = fit_pearson3(m1, m2, m3);
            return {"pearson3", f.a, f.b, f.p, capped_expectation(f, kind, cap)};
        } catch (const ZeroVarianceError&) {
            ++fallbacks;
        } catch (const NonPositiveSkewError&) {
            ++fallbacks;
            family = FitFamily::ChiSquare;
        }
    }
    if (family == FitFamily::LogNormal) {
        try {
            const LogNormalFit f = fit_lognormal(m1, m2);
            return {"logNormal", f.mu, f.sigma, 0.0, capped_expectation(f, kind, cap)};
        } catch (const ZeroVarianceError&) {
            ++fallbacks;
            return deterministic_capped(kind, m1, cap);
        }
    }
    try {
        const ChiSquareFit f = fit_chi_square(m1, m2);
        return {"chiSquare", f.a, f.scale, 0.0, capped_expectation(f, kind, cap)};
    } catch (const ZeroVarianceError&) {
        ++fallbacks;
        return deterministic_capped(kind, m1, cap);
    }
}

struct SwapInputs {
    TimeGrid grid;
    PathFunctional phi;
    BridgeMoments mom;
    double span = 0.0;
};

SwapInputs swap_inputs(const Model& model, const ContractSpec& spec, FunctionalKind kind,
                       int order, const EngineOptions& opts) {
    SwapInputs in;
    in.grid = model.timeGrid(spec.issuance, spec.maturity);
    in.phi = build_functional(kind, in.grid, model.lattice, model.grid, spec.corridor,
                              functional_options(opts));
    in.mom = moments_fd(in.grid, in.phi, order, model.initialState, moment_options(opts));
    in.span = spec.span();
    return in;
}

PriceReport report_shell(const ContractSpec& spec) {
    PriceReport r;
    r.contract = spec.name.empty() ? to_string(spec.kind) : spec.name;
    r.kind = spec.kind;
    return r;
}

/// Shared pipeline of the variance-flavoured swaps: annualized bridge
/// moments, per-bridge fit, cap, propagator re-weighting.
PriceReport price_swap_core(const Model& model, const ContractSpec& spec, FunctionalKind fkind,
                            PayoffKind pkind, const EngineOptions& opts) {
    const bool sqrtKind = pkind == PayoffKind::SqrtRV;
    const int order = spec.uncappedOnly && !sqrtKind
                          ? 1
                          : (spec.fitFamily == FitFamily::Pearson3 ? 3 : 2);
    const SwapInputs in = swap_inputs(model, spec, fkind, order, opts);
    const int n = in.grid.states();
    const double span = in.span;

    PriceReport r = report_shell(spec);
    const double uncappedVar = std::max(in.mom.raw[0].sum() / span, 0.0);
    r.uncappedRate = std::sqrt(uncappedVar);

    double cap = kInf;
    if (!spec.uncappedOnly) {
        if (spec.explicitCap)
            cap = *spec.explicitCap;
        else if (opts.literalRvMax)
            cap = spec.capFactor *
                  in.mom.transition.dot(in.mom.raw[1]) / (span * span);
        else
            cap = spec.capFactor * uncappedVar;
    }

    // One pass of the bridge sum for a given cap; rows are rebuilt so the
    // breakdown always reflects the cap actually applied.
    auto sweep = [&](double rvMax, std::vector<BridgeRow>* rows, double* skipped,
                     int* fallbacks) {
        double total = 0.0;
        double uncappedTotal = 0.0;
        for (int y2 = 0; y2 < n; ++y2) {
            const double u = in.mom.transition(y2);
            if (u <= opts.transitionFloor) {
                if (skipped) *skipped += std::max(u, 0.0);
                continue;
            }
            const double m1 = in.mom.normalized[0](y2) / span;
            const double m2 = order >= 2 ? in.mom.normalized[1](y2) / (span * span) : 0.0;
            const double m3 =
                order >= 3 ? in.mom.normalized[2](y2) / (span * span * span) : 0.0;
            int fb = 0;
            FitOutcome out;
            if (spec.uncappedOnly && !sqrtKind) {
                out.name = "firstMoment";
                out.p1 = m1;
                out.value = std::max(m1, 0.0);
            } else {
                out = capped_with_fallback(spec.fitFamily, pkind, m1, m2, m3, rvMax, fb);
            }
            if (sqrtKind) {
                int fbU = 0;
                uncappedTotal +=
                    u * capped_with_fallback(spec.fitFamily, pkind, m1, m2, m3, kInf, fbU).value;
            }
            total += u * out.value;
            if (fallbacks) *fallbacks += fb;
            if (rows) rows->push_back({y2, u, out.name, out.p1, out.p2, out.p3, out.value});
        }
        return std::pair<double, double>{total, uncappedTotal};
    };

    if (opts.useRootFinder && !spec.uncappedOnly && !spec.explicitCap) {
        // Equilibrium rate: SR solving sum U E[min(payoff, cap(SR))] = strike
        // leg, with cap(SR) = f SR^2.
        auto excess = [&](double sr) {
            const auto [total, unc] = sweep(spec.capFactor * sr * sr, nullptr, nullptr, nullptr);
            return sqrtKind ? total - sr : total - sr * sr;
        };
        double lo = 1e-10;
        double hi = std::max(2.0 * r.uncappedRate, 1e-4);
        while (excess(hi) > 0.0 && hi < 1e3) hi *= 2.0;
        for (int i = 0; i < 100; ++i) {
            const double mid = 0.5 * (lo + hi);
            (excess(mid) > 0.0 ? lo : hi) = mid;
        }
        cap = spec.capFactor * lo * lo;
    }

    const auto [total, uncappedTotal] =
        sweep(cap, &r.breakdown, &r.skippedMass, &r.fallbackCount);
    r.capLevel = cap;
    r.sumCheck = total;
    if (sqrtKind) {
        r.uncappedRate = uncappedTotal;
        r.cappedRate = total;
    } else {
        r.cappedRate = std::sqrt(std::max(total, 0.0));
        if (spec.uncappedOnly) r.uncappedRate = r.cappedRate;
    }
    r.headline = spec.uncappedOnly ? r.uncappedRate : r.cappedRate;
    return r;
}

bool occupation_is_deterministic(const PathFunctional& psi, double* level) {
    double c = psi.values.front()(0);
    for (const auto& v : psi.values) {
        if (v.minCoeff() != c || v.maxCoeff() != c) return false;
    }
    *level = c;
    return true;
}

}  // namespace

std::string to_string(ContractKind k) {
    switch (k) {
        case ContractKind::VarianceSwap: return "varianceSwap";
        case ContractKind::VolatilitySwap: return "volatilitySwap";
        case ContractKind::CorridorVarianceSwap: return "corridorVarianceSwap";
        case ContractKind::ConditionalVarianceSwap: return "conditionalVarianceSwap";
        case ContractKind::GammaSwap: return "gammaSwap";
        case ContractKind::RvOption: return "rvOption";
        default: return "varianceKnockout";
    }
}

ContractKind contract_kind_from_string(const std::string& s) {
    for (ContractKind k :
         {ContractKind::VarianceSwap, ContractKind::VolatilitySwap,
          ContractKind::CorridorVarianceSwap, ContractKind::ConditionalVarianceSwap,
          ContractKind::GammaSwap, ContractKind::RvOption, ContractKind::VarianceKnockout})
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown contract kind: " + s);
}

std::string to_string(FitFamily f) {
    switch (f) {
        case FitFamily::ChiSquare: return "chiSquare";
        case FitFamily::LogNormal: return "logNormal";
        default: return "pearson3";
    }
}

FitFamily fit_family_from_string(const std::string& s) {
    for (FitFamily f : {FitFamily::ChiSquare, FitFamily::LogNormal, FitFamily::Pearson3})
        if (to_string(f) == s) return f;
    throw std::invalid_argument("unknown fit family: " + s);
}

void ContractSpec::validate() const {
    if (issuance < 0.0) throw std::invalid_argument("contract: negative issuance time");
    if (!(maturity > issuance))
        throw std::invalid_argument("contract: maturity must exceed issuance");
    if (!(capFactor > 1.0)) throw std::invalid_argument("contract: cap factor must exceed 1");
    if (explicitCap && !(*explicitCap > 0.0))
        throw std::invalid_argument("contract: explicit cap must be positive");
    const bool needsCorridor = kind == ContractKind::CorridorVarianceSwap ||
                               kind == ContractKind::ConditionalVarianceSwap;
    if (needsCorridor && !corridor)
        throw std::invalid_argument("contract: corridor required for " + to_string(kind));
    if (corridor && !(corridor->lo < corridor->hi))
        throw std::invalid_argument("contract: corridor must have lo < hi");
    if (kind == ContractKind::VarianceKnockout) {
        if (!(barrier > 0.0)) throw std::invalid_argument("contract: knockout needs a barrier");
        if (strike < 0.0) throw std::invalid_argument("contract: negative strike");
    }
    if (kind == ContractKind::RvOption && strike < 0.0)
        throw std::invalid_argument("contract: negative strike");
    if (kind == ContractKind::VolatilitySwap && fitFamily == FitFamily::Pearson3)
        throw UnsupportedPayoffError(
            "contract: pearson3 has no sqrt-payoff formula; use chiSquare or logNormal");
}

PriceReport price_variance_swap(const Model& model, const ContractSpec& spec,
                                const EngineOptions& opts) {
    return price_swap_core(model, spec, FunctionalKind::Variance, PayoffKind::RV, opts);
}

PriceReport price_volatility_swap(const Model& model, const ContractSpec& spec,
                                  const EngineOptions& opts) {
    return price_swap_core(model, spec, FunctionalKind::Variance, PayoffKind::SqrtRV, opts);
}

PriceReport price_corridor_variance_swap(const Model& model, const ContractSpec& spec,
                                         const EngineOptions& opts) {
    return price_swap_core(model, spec, FunctionalKind::CorridorVariance, PayoffKind::RV, opts);
}

PriceReport price_conditional_variance_swap(const Model& model, const ContractSpec& spec,
                                            const EngineOptions& opts) {
    const TimeGrid grid = model.timeGrid(spec.issuance, spec.maturity);
    const PathFunctional phi =
        build_functional(FunctionalKind::CorridorVariance, grid, model.lattice, model.grid,
                         spec.corridor, functional_options(opts));
    const PathFunctional psi = build_functional(FunctionalKind::Occupation, grid, model.lattice,
                                                model.grid, spec.corridor);
    const double span = spec.span();
    const double cap = spec.explicitCap ? *spec.explicitCap : kInf;
    const double occFloor = opts.occupationFloorFactor * span;

    PriceReport r = report_shell(spec);
    double total = 0.0;
    double uncappedTotal = 0.0;
    bool any = false;

    double level = 0.0;
    if (occupation_is_deterministic(psi, &level) && level > 0.0) {
        // Full-range corridor (or any constant occupation): the denominator
        // is the constant level * span, so the ratio needs no bivariate fit.
        const int order = std::isinf(cap) ? 1 : 2;
        const BridgeMoments mom =
            moments_fd(grid, phi, order, model.initialState, moment_options(opts));
        const double denom = level * span;
        for (int y2 = 0; y2 < grid.states(); ++y2) {
            const double u = mom.transition(y2);
            if (u <= opts.transitionFloor) {
                r.skippedMass += std::max(u, 0.0);
                continue;
            }
            any = true;
            const double m1 = mom.normalized[0](y2) / denom;
            FitOutcome out;
            if (std::isinf(cap)) {
                out = {"detDenominator", m1, 0.0, 0.0, std::max(m1, 0.0)};
            } else {
                const double m2 = mom.normalized[1](y2) / (denom * denom);
                out = capped_with_fallback(FitFamily::LogNormal, PayoffKind::RV, m1, m2, 0.0,
                                           cap, r.fallbackCount);
            }
            uncappedTotal += u * std::max(m1, 0.0);
            total += u * out.value;
            r.breakdown.push_back({y2, u, out.name, out.p1, out.p2, out.p3, out.value});
        }
    } else {
        const BivariateBridgeMoments bm =
            bivariate_moments(grid, phi, psi, model.initialState, moment_options(opts));
        for (int y2 = 0; y2 < grid.states(); ++y2) {
            const double u = bm.transition(y2);
            if (u <= opts.transitionFloor) {
                r.skippedMass += std::max(u, 0.0);
                continue;
            }
            const double n10 = bm.n10(y2), n20 = bm.n20(y2);
            const double n01 = bm.n01(y2), n02 = bm.n02(y2), n11 = bm.n11(y2);
            if (n01 < occFloor) {
                r.skippedMass += u;
                continue;
            }
            any = true;
            FitOutcome out;
            double uncapped = 0.0;
            try {
                BivariateLogNormalFit f;
                try {
                    f = fit_bivariate_lognormal(n10, n20, n01, n02, n11);
                    out.name = "bivariateLogNormal";
                } catch (const CorrelationOutOfRangeError&) {
                    ++r.fallbackCount;
                    f.mu1 = std::log(n10 * n10 / std::sqrt(n20));
                    f.sigma1 = std::sqrt(std::log(n20 / (n10 * n10)));
                    f.mu2 = std::log(n01 * n01 / std::sqrt(n02));
                    f.sigma2 = std::sqrt(std::log(n02 / (n01 * n01)));
                    f.rho = n11 > n10 * n01 ? 1.0 : -1.0;
                    out.name = "clampedRho";
                }
                out.p1 = f.sigma1;
                out.p2 = f.sigma2;
                out.p3 = f.rho;
                uncapped = ratio_expectation(f);
                out.value =
                    std::isinf(cap) ? uncapped : capped_ratio_expectation(f, cap);
            } catch (const ZeroVarianceError&) {
                ++r.fallbackCount;
                if (!(n10 > 0.0)) {
                    out = {"deterministic", n10, 0.0, 0.0, 0.0};
                    uncapped = 0.0;
                } else if (n02 > n01 * n01 * (1.0 + 1e-10)) {
                    // Deterministic numerator: the ratio is log-normal in 1/X2.
                    const LogNormalFit f2 = fit_lognormal(n01, n02);
                    const LogNormalFit ratio{std::log(n10) - f2.mu, f2.sigma};
                    uncapped =
                        std::exp(ratio.mu + 0.5 * ratio.sigma * ratio.sigma);
                    out = {"detNumerator", ratio.mu, ratio.sigma, 0.0,
                           capped_expectation(ratio, PayoffKind::RV, cap)};
                } else {
                    uncapped = n10 / n01;
                    out = {"detDenominator", n10, n01, 0.0, std::min(uncapped, cap)};
                }
            }
            uncappedTotal += u * uncapped;
            total += u * out.value;
            r.breakdown.push_back({y2, u, out.name, out.p1, out.p2, out.p3, out.value});
        }
    }

    if (!any)
        throw std::runtime_error("conditional swap: every bridge is below the occupation floor");
    r.sumCheck = total;
    r.capLevel = cap;
    r.uncappedRate = std::sqrt(std::max(uncappedTotal, 0.0));
    r.cappedRate = std::sqrt(std::max(total, 0.0));
    r.headline = r.cappedRate;
    return r;
}

PriceReport price_gamma_swap(const Model& model, const ContractSpec& spec,
                             const EngineOptions& opts) {
    ContractSpec uncapped = spec;
    uncapped.uncappedOnly = true;
    return price_swap_core(model, uncapped, FunctionalKind::Gamma, PayoffKind::RV, opts);
}

PriceReport price_rv_option(const Model& model, const ContractSpec& spec,
                            const EngineOptions& opts) {
    const SwapInputs in = swap_inputs(model, spec, FunctionalKind::Variance, 2, opts);
    const double span = in.span;
    const double tot = in.mom.transition.sum();
    const double m1 = in.mom.raw[0].sum() / (tot * span);
    const double m2 = in.mom.raw[1].sum() / (tot * span * span);
    const double discount = model.rates.discount(spec.issuance, spec.maturity);

    PriceReport r = report_shell(spec);
    FitOutcome out;
    try {
        const LogNormalFit f = fit_lognormal(m1, m2);
        out = {"logNormal", f.mu, f.sigma, 0.0, discount * lognormal_call(f, spec.strike)};
    } catch (const ZeroVarianceError&) {
        ++r.fallbackCount;
        out = {"deterministic", m1, 0.0, 0.0, discount * std::max(m1 - spec.strike, 0.0)};
    }
    r.breakdown.push_back({model.initialState, 1.0, out.name, out.p1, out.p2, out.p3, out.value});
    r.sumCheck = out.value;
    r.headline = out.value;
    r.uncappedRate = r.cappedRate = out.value;
    return r;
}

PriceReport price_variance_knockout(const Model& model, const ContractSpec& spec,
                                    const EngineOptions& opts) {
    const int order = spec.fitFamily == FitFamily::Pearson3 ? 3 : 2;
    const SwapInputs in = swap_inputs(model, spec, FunctionalKind::Variance, order, opts);
    const double span = in.span;
    const double discount = model.rates.discount(spec.issuance, spec.maturity);
    const double barrierVar = spec.barrier * spec.barrier;

    PriceReport r = report_shell(spec);
    double total = 0.0;
    for (int y2 = 0; y2 < in.grid.states(); ++y2) {
        const double u = in.mom.transition(y2);
        if (u <= opts.transitionFloor) {
            r.skippedMass += std::max(u, 0.0);
            continue;
        }
        const double terminalPrice = model.grid.price(model.lattice.unflatten(y2).x);
        const double call = std::max(discount * terminalPrice - spec.strike, 0.0);
        const double m1 = in.mom.normalized[0](y2) / span;
        const double m2 = in.mom.normalized[1](y2) / (span * span);
        const double m3 = order >= 3 ? in.mom.normalized[2](y2) / (span * span * span) : 0.0;

        FitOutcome out;
        double prob = 1.0;
        if (std::isinf(spec.barrier)) {
            out.name = "noBarrier";
        } else if (spec.fitFamily == FitFamily::Pearson3) {
            try {
                const PearsonIIIFit f = fit_pearson3(m1, m2, m3);
                prob = cdf(f, barrierVar);
                out = {"pearson3", f.a, f.b, f.p, 0.0};
            } catch (const std::runtime_error&) {
                ++r.fallbackCount;
                prob = m1 < barrierVar ? 1.0 : 0.0;
                out = {"deterministic", m1, 0.0, 0.0, 0.0};
            }
        } else if (spec.fitFamily == FitFamily::LogNormal) {
            try {
                const LogNormalFit f = fit_lognormal(m1, m2);
                prob = cdf(f, barrierVar);
                out = {"logNormal", f.mu, f.sigma, 0.0, 0.0};
            } catch (const ZeroVarianceError&) {
                ++r.fallbackCount;
                prob = m1 < barrierVar ? 1.0 : 0.0;
                out = {"deterministic", m1, 0.0, 0.0, 0.0};
            }
        } else {
            try {
                const ChiSquareFit f = fit_chi_square(m1, m2);
                prob = cdf(f, barrierVar);
                out = {"chiSquare", f.a, f.scale, 0.0, 0.0};
            } catch (const ZeroVarianceError&) {
                ++r.fallbackCount;
                prob = m1 < barrierVar ? 1.0 : 0.0;
                out = {"deterministic", m1, 0.0, 0.0, 0.0};
            }
        }
        out.value = prob * call;
        total += u * out.value;
        r.breakdown.push_back({y2, u, out.name, out.p1, out.p2, out.p3, out.value});
    }
    r.sumCheck = total;
    r.headline = total;
    r.uncappedRate = r.cappedRate = total;
    r.capLevel = barrierVar;
    return r;
}

PriceReport price_contract(const Model& model, const ContractSpec& spec,
                           const EngineOptions& opts) {
    spec.validate();
    switch (spec.kind) {
        case ContractKind::VarianceSwap: return price_variance_swap(model, spec, opts);
        case ContractKind::VolatilitySwap: return price_volatility_swap(model, spec, opts);
        case ContractKind::CorridorVarianceSwap:
            return price_corridor_variance_swap(model, spec, opts);
        case ContractKind::ConditionalVarianceSwap:
            return price_conditional_variance_swap(model, spec, opts);
        case ContractKind::GammaSwap: return price_gamma_swap(model, spec, opts);
        case ContractKind::RvOption: return price_rv_option(model, spec, opts);
        default: return price_variance_knockout(model, spec, opts);
    }
}

std::string PriceReport::toJson() const {
    nlohmann::json j;
    j["contract"] = contract;
    j["kind"] = to_string(kind);
    j["headline"] = headline;
    j["uncappedRate"] = uncappedRate;
    j["cappedRate"] = cappedRate;
    j["capLevel"] = std::isinf(capLevel) ? nlohmann::json("inf") : nlohmann::json(capLevel);
    j["skippedMass"] = skippedMass;
    j["fallbackCount"] = fallbackCount;
    j["sumCheck"] = sumCheck;
    j["bridges"] = breakdown.size();
    return j.dump(2);
}

void PriceReport::writeCsv(std::ostream& os) const {
    os << "contract,y2,weight,fit,p1,p2,p3,payoff\n";
    char buf[32];
    auto fmt = [&](double v) {
        snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    for (const auto& row : breakdown)
        os << contract << ',' << row.y2 << ',' << fmt(row.weight) << ',' << row.fit << ','
           << fmt(row.p1) << ',' << fmt(row.p2) << ',' << fmt(row.p3) << ',' << fmt(row.payoff)
           << "\n";
}

}  // namespace volmom
