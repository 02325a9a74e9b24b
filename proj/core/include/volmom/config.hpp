#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "volmom/model.hpp"
#include "volmom/pricers.hpp"

namespace volmom {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Fully resolved run configuration. parse_config applies defaults and
/// rejects unknown keys; resolved() echoes a config that reproduces the run.
struct RunConfig {
    int nx = 70;
    double spot = 100.0;
    GridSpec gridSpec;
    BetaCurve beta;
    Outlook initialOutlook = Outlook::Stable;
    VolRegime initialVol = VolRegime::Medium;
    ModelConfig model;
    RateCurve rates;
    std::vector<ContractSpec> contracts;
    EngineOptions engine;
    long mcPaths = 100000;
    std::uint64_t seed = 42;

    nlohmann::json resolved() const;
};

RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_file(const std::string& path);

Model build_model(const RunConfig& cfg);

}  // namespace volmom
