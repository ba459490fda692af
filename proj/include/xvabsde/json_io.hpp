#pragma once

#include <string>

#include <json.hpp>

#include "xvabsde/analysis.hpp"
#include "xvabsde/lsmc.hpp"
#include "xvabsde/market.hpp"
#include "xvabsde/pde.hpp"
#include "xvabsde/xva.hpp"

namespace xvabsde {

using Json = nlohmann::json;

/// One self-contained run: market + contract + numerics, as carried by the
/// JSON configuration files.
struct RunConfig {
    std::string schema_version = "1";
    MarketSpec market;
    ContractSpec contract;
    NumericsConfig numerics;
};

Json to_json(const MarketSpec& market);
Json to_json(const ContractSpec& contract);
Json to_json(const NumericsConfig& numerics);
Json to_json(const RunConfig& config);

MarketSpec market_from_json(const Json& j);
ContractSpec contract_from_json(const Json& j);
NumericsConfig numerics_from_json(const Json& j);

/// Parses a config document; wraps parser diagnostics (with line/column) and
/// schema violations in ConfigError.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

Json to_json(const ValidationReport& report);
Json to_json(const PriceBounds& bounds);
Json to_json(const XVAReport& report);
Json to_json(const ClassicalXva& xva);
Json to_json(const TelescopingReport& report);
Json to_json(const GirsanovReport& report);
Json to_json(const NoArbReport& report);
Json to_json(const OrderingReport& report);
Json to_json(const SweepResult& result);
Json to_json(const ReplicationReport& report);
Json to_json(const MartingaleReport& report);
Json to_json(const RefineStudy& study);

/// Report envelope: library version, the fully resolved config, and the body.
Json report_envelope(const RunConfig& config, const std::string& command, Json body);

// CSV renderings (comma separated, '.' decimal, LF line endings, header row).
std::string xva_csv(const XVAReport& report);
std::string noarb_csv(const NoArbReport& report);
std::string ordering_csv(const OrderingReport& report);
std::string sweep_csv(const SweepResult& result);
std::string replicate_csv(const ReplicationReport& report);

} // namespace xvabsde
