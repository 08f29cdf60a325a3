#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "koop/snapshots.hpp"
#include "koop/systems.hpp"

namespace koop {

/// Builds a SystemSpec from its JSON description. Supported forms:
///   {"type":"catalog","name":"...","overrides":{...}}
///   {"type":"hybrid","switch_times":[...],"matrices":[[[...]],...]}
///   {"type":"spiral","sigma":{"const":c,"cos_amp":a,"sin_amp":b,"freq":w},"omega":{...}}
SystemSpec system_from_json(const nlohmann::json& j);

/// Validated canonical form of a system description: defaults filled in,
/// keys sorted. parse -> canonicalize -> parse is the identity.
nlohmann::json canonical_system_json(const nlohmann::json& j);

/// Accepts a JSON file path, an inline JSON object, or a bare catalog name.
SystemSpec system_from_argument(const std::string& arg);
nlohmann::json system_json_from_argument(const std::string& arg);

/// Comma-separated reals, e.g. "1,1" -> (1, 1).
RealVector parse_x0(const std::string& text);

/// Pair list "(0,1),(2,3)" (semicolons also accepted between pairs).
ObservableMap parse_pairings(const std::string& text);

}  // namespace koop
