#include "volmom/config.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace volmom {

namespace {

using nlohmann::json;

void require_object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError("expected an object at " + path);
}

void check_keys(const json& j, const std::string& path, std::set<std::string> allowed) {
    require_object(j, path);
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key at " + path + ": '" + it.key() + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, const std::string& path, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("bad value at " + path + "/" + key);
    }
}

std::vector<double> get_numbers(const json& j, const std::string& path) {
    if (!j.is_array()) throw ConfigError("expected an array at " + path);
    std::vector<double> out;
    for (const auto& v : j) {
        if (!v.is_number()) throw ConfigError("expected numbers at " + path);
        out.push_back(v.get<double>());
    }
    return out;
}

void parse_lattice(const json& j, RunConfig& cfg) {
    check_keys(j, "/lattice",
               {"nx", "spot", "sMin", "sMax", "beta", "initialOutlook", "initialVol",
                "localVolatility"});
    cfg.nx = get_or(j, "nx", "/lattice", cfg.nx);
    cfg.spot = get_or(j, "spot", "/lattice", cfg.spot);
    cfg.gridSpec.sMin = get_or(j, "sMin", "/lattice", cfg.gridSpec.sMin);
    cfg.gridSpec.sMax = get_or(j, "sMax", "/lattice", cfg.gridSpec.sMax);
    cfg.model.localVolatility =
        get_or(j, "localVolatility", "/lattice", cfg.model.localVolatility);
    if (j.contains("beta")) {
        check_keys(j.at("beta"), "/lattice/beta", {"prices", "values"});
        cfg.beta.prices = get_numbers(j.at("beta").at("prices"), "/lattice/beta/prices");
        cfg.beta.values = get_numbers(j.at("beta").at("values"), "/lattice/beta/values");
    }
    try {
        cfg.initialOutlook =
            outlook_from_string(get_or<std::string>(j, "initialOutlook", "/lattice", "stable"));
        cfg.initialVol =
            vol_regime_from_string(get_or<std::string>(j, "initialVol", "/lattice", "medium"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("/lattice: ") + e.what());
    }
}

void parse_jumps(const json& j, ModelConfig& m) {
    check_keys(j, "/jumps",
               {"negJumpSize", "stableJumpSize", "intensity", "jointOutlookJumps",
                "outlookSwitch"});
    m.negJumpSize = get_or(j, "negJumpSize", "/jumps", m.negJumpSize);
    m.stableJumpSize = get_or(j, "stableJumpSize", "/jumps", m.stableJumpSize);
    m.jumpIntensity = get_or(j, "intensity", "/jumps", m.jumpIntensity);
    m.jointOutlookJumps = get_or(j, "jointOutlookJumps", "/jumps", m.jointOutlookJumps);
    if (j.contains("outlookSwitch")) {
        const json& s = j.at("outlookSwitch");
        check_keys(s, "/jumps/outlookSwitch", {"stableToNegative", "negativeToStable"});
        m.outlookSwitch.stableToNegative = get_or(s, "stableToNegative", "/jumps/outlookSwitch",
                                                  m.outlookSwitch.stableToNegative);
        m.outlookSwitch.negativeToStable = get_or(s, "negativeToStable", "/jumps/outlookSwitch",
                                                  m.outlookSwitch.negativeToStable);
    }
}

void parse_vg(const json& j, ModelConfig& m) {
    check_keys(j, "/vg", {"varianceRate", "gammaVariance", "smallJumpTruncation"});
    m.vgVarianceRate = get_or(j, "varianceRate", "/vg", m.vgVarianceRate);
    m.vgGammaVariance = get_or(j, "gammaVariance", "/vg", m.vgGammaVariance);
    m.smallJumpTruncation = get_or(j, "smallJumpTruncation", "/vg", m.smallJumpTruncation);
}

void parse_regimes(const json& j, ModelConfig& m) {
    check_keys(j, "/regimes", {"volMultipliers", "switchRates"});
    if (j.contains("volMultipliers")) {
        const auto mults = get_numbers(j.at("volMultipliers"), "/regimes/volMultipliers");
        if (mults.size() != 3)
            throw ConfigError("/regimes/volMultipliers: need exactly 3 values");
        for (size_t i = 0; i < 3; ++i) m.regimeVolMultipliers[i] = mults[i];
    }
    if (j.contains("switchRates")) {
        const json& s = j.at("switchRates");
        check_keys(s, "/regimes/switchRates", {"lowToMed", "medToLow", "medToHigh", "highToMed"});
        m.volSwitch.lowToMed = get_or(s, "lowToMed", "/regimes/switchRates", m.volSwitch.lowToMed);
        m.volSwitch.medToLow = get_or(s, "medToLow", "/regimes/switchRates", m.volSwitch.medToLow);
        m.volSwitch.medToHigh =
            get_or(s, "medToHigh", "/regimes/switchRates", m.volSwitch.medToHigh);
        m.volSwitch.highToMed =
            get_or(s, "highToMed", "/regimes/switchRates", m.volSwitch.highToMed);
    }
}

ContractSpec parse_contract(const json& j, const std::string& path) {
    check_keys(j, path,
               {"kind", "name", "issuance", "maturity", "capFactor", "uncappedOnly", "cap",
                "corridor", "strike", "barrier", "fitFamily", "maturityGrid"});
    ContractSpec c;
    try {
        c.kind = contract_kind_from_string(get_or<std::string>(j, "kind", path, "varianceSwap"));
        c.fitFamily =
            fit_family_from_string(get_or<std::string>(j, "fitFamily", path, "chiSquare"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(path + ": " + e.what());
    }
    c.name = get_or<std::string>(j, "name", path, "");
    c.issuance = get_or(j, "issuance", path, c.issuance);
    c.maturity = get_or(j, "maturity", path, c.maturity);
    c.capFactor = get_or(j, "capFactor", path, c.capFactor);
    c.uncappedOnly = get_or(j, "uncappedOnly", path, c.uncappedOnly);
    if (j.contains("cap")) c.explicitCap = get_or(j, "cap", path, 0.0);
    if (j.contains("corridor")) {
        const json& cj = j.at("corridor");
        check_keys(cj, path + "/corridor", {"lo", "hi"});
        Corridor corr;
        corr.lo = get_or(cj, "lo", path + "/corridor", 0.0);
        corr.hi = get_or(cj, "hi", path + "/corridor",
                         std::numeric_limits<double>::infinity());
        c.corridor = corr;
    }
    c.strike = get_or(j, "strike", path, c.strike);
    c.barrier = get_or(j, "barrier", path, c.barrier);
    return c;
}

void parse_engine(const json& j, RunConfig& cfg) {
    check_keys(j, "/engine",
               {"epsBase", "transitionFloor", "occupationFloorFactor", "literalRvMax",
                "destinationIndicator", "gammaSpotWeight", "gammaUnitWeight", "useRootFinder",
                "accuracyTarget", "mcPaths", "seed"});
    EngineOptions& e = cfg.engine;
    e.epsBase = get_or(j, "epsBase", "/engine", e.epsBase);
    e.transitionFloor = get_or(j, "transitionFloor", "/engine", e.transitionFloor);
    e.occupationFloorFactor =
        get_or(j, "occupationFloorFactor", "/engine", e.occupationFloorFactor);
    e.literalRvMax = get_or(j, "literalRvMax", "/engine", e.literalRvMax);
    e.destinationIndicator = get_or(j, "destinationIndicator", "/engine", e.destinationIndicator);
    e.gammaSpotWeight = get_or(j, "gammaSpotWeight", "/engine", e.gammaSpotWeight);
    e.gammaUnitWeight = get_or(j, "gammaUnitWeight", "/engine", e.gammaUnitWeight);
    e.useRootFinder = get_or(j, "useRootFinder", "/engine", e.useRootFinder);
    e.expOpts.accuracyTarget = get_or(j, "accuracyTarget", "/engine", e.expOpts.accuracyTarget);
    cfg.mcPaths = get_or<long>(j, "mcPaths", "/engine", cfg.mcPaths);
    cfg.seed = get_or<std::uint64_t>(j, "seed", "/engine", cfg.seed);
}

std::string trimmed(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

}  // namespace

RunConfig parse_config(const json& doc) {
    check_keys(doc, "/", {"lattice", "jumps", "vg", "regimes", "rates", "contracts", "engine"});
    RunConfig cfg;
    if (doc.contains("lattice")) parse_lattice(doc.at("lattice"), cfg);
    if (doc.contains("jumps")) parse_jumps(doc.at("jumps"), cfg.model);
    if (doc.contains("vg")) parse_vg(doc.at("vg"), cfg.model);
    if (doc.contains("regimes")) parse_regimes(doc.at("regimes"), cfg.model);

    if (doc.contains("rates")) {
        const json& r = doc.at("rates");
        check_keys(r, "/rates", {"times", "rates"});
        cfg.rates.times = get_numbers(r.at("times"), "/rates/times");
        cfg.rates.rates = get_numbers(r.at("rates"), "/rates/rates");
    } else {
        cfg.rates.times = {30.0};
        cfg.rates.rates = {0.0};
    }

    if (doc.contains("contracts")) {
        const json& arr = doc.at("contracts");
        if (!arr.is_array()) throw ConfigError("expected an array at /contracts");
        int idx = 0;
        for (const auto& cj : arr) {
            const std::string path = "/contracts/" + std::to_string(idx);
            ContractSpec base = parse_contract(cj, path);
            std::vector<double> maturities;
            if (cj.contains("maturityGrid")) {
                const json& g = cj.at("maturityGrid");
                check_keys(g, path + "/maturityGrid", {"start", "stop", "step"});
                const double start = get_or(g, "start", path + "/maturityGrid", 0.25);
                const double stop = get_or(g, "stop", path + "/maturityGrid", 3.0);
                const double step = get_or(g, "step", path + "/maturityGrid", 0.25);
                if (!(step > 0.0) || !(stop >= start))
                    throw ConfigError(path + "/maturityGrid: need step > 0 and stop >= start");
                for (double t = start; t <= stop + 1e-9; t += step) maturities.push_back(t);
            } else {
                maturities.push_back(base.maturity);
            }
            const std::string baseName =
                base.name.empty() ? to_string(base.kind) : base.name;
            for (double t : maturities) {
                ContractSpec c = base;
                c.maturity = t;
                if (maturities.size() > 1) c.name = baseName + "_" + trimmed(t);
                try {
                    c.validate();
                } catch (const std::exception& e) {
                    throw ConfigError(path + ": " + e.what());
                }
                cfg.contracts.push_back(std::move(c));
            }
            ++idx;
        }
    }

    if (doc.contains("engine")) parse_engine(doc.at("engine"), cfg);

    try {
        cfg.model.validate();
        cfg.rates.validate();
        cfg.beta.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw ConfigError("malformed JSON in " + path + ": " + e.what());
    }
    return parse_config(doc);
}

nlohmann::json RunConfig::resolved() const {
    json j;
    j["lattice"] = {{"nx", nx},
                    {"spot", spot},
                    {"sMin", gridSpec.sMin},
                    {"sMax", gridSpec.sMax},
                    {"initialOutlook", to_string(initialOutlook)},
                    {"initialVol", to_string(initialVol)},
                    {"localVolatility", model.localVolatility}};
    if (!beta.prices.empty())
        j["lattice"]["beta"] = {{"prices", beta.prices}, {"values", beta.values}};
    j["jumps"] = {{"negJumpSize", model.negJumpSize},
                  {"stableJumpSize", model.stableJumpSize},
                  {"intensity", model.jumpIntensity},
                  {"jointOutlookJumps", model.jointOutlookJumps},
                  {"outlookSwitch",
                   {{"stableToNegative", model.outlookSwitch.stableToNegative},
                    {"negativeToStable", model.outlookSwitch.negativeToStable}}}};
    j["vg"] = {{"varianceRate", model.vgVarianceRate},
               {"gammaVariance", model.vgGammaVariance},
               {"smallJumpTruncation", model.smallJumpTruncation}};
    j["regimes"] = {{"volMultipliers", model.regimeVolMultipliers},
                    {"switchRates",
                     {{"lowToMed", model.volSwitch.lowToMed},
                      {"medToLow", model.volSwitch.medToLow},
                      {"medToHigh", model.volSwitch.medToHigh},
                      {"highToMed", model.volSwitch.highToMed}}}};
    j["rates"] = {{"times", rates.times}, {"rates", rates.rates}};
    j["contracts"] = json::array();
    for (const auto& c : contracts) {
        json cj = {{"kind", to_string(c.kind)},     {"name", c.name},
                   {"issuance", c.issuance},        {"maturity", c.maturity},
                   {"capFactor", c.capFactor},      {"uncappedOnly", c.uncappedOnly},
                   {"strike", c.strike},            {"barrier", c.barrier},
                   {"fitFamily", to_string(c.fitFamily)}};
        if (c.explicitCap) cj["cap"] = *c.explicitCap;
        if (c.corridor) cj["corridor"] = {{"lo", c.corridor->lo}, {"hi", c.corridor->hi}};
        j["contracts"].push_back(std::move(cj));
    }
    j["engine"] = {{"epsBase", engine.epsBase},
                   {"transitionFloor", engine.transitionFloor},
                   {"occupationFloorFactor", engine.occupationFloorFactor},
                   {"literalRvMax", engine.literalRvMax},
                   {"destinationIndicator", engine.destinationIndicator},
                   {"gammaSpotWeight", engine.gammaSpotWeight},
                   {"gammaUnitWeight", engine.gammaUnitWeight},
                   {"useRootFinder", engine.useRootFinder},
                   {"accuracyTarget", engine.expOpts.accuracyTarget},
                   {"mcPaths", mcPaths},
                   {"seed", seed}};
    return j;
}

Model build_model(const RunConfig& cfg) {
    Lattice lat;
    lat.nx = cfg.nx;
    const StockGrid grid = build_stock_grid(cfg.nx, cfg.spot, cfg.gridSpec, cfg.beta);
    return build_model(lat, grid, cfg.model, cfg.rates, cfg.initialOutlook, cfg.initialVol);
}

}  // namespace volmom
