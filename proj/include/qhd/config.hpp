#pragma once

#include <map>
#include <string>
#include <vector>

#include "qhd/solver.hpp"

namespace qhd {

/// Raw sectioned key/value text, syntax-checked only.  Sections and keys keep
/// file order; duplicate keys and content outside a section are rejected.
struct ParsedConfig {
    std::vector<std::pair<std::string, std::map<std::string, std::string>>> sections;

    bool has(const std::string& section) const;
    const std::map<std::string, std::string>& at(const std::string& section) const;
};

/// Parses the text of a run configuration:
///   - `[section]` headers, `key = value` entries, `#` comments, blank lines
///   - recognized sections: equation, params, grid, initial, time, output
/// Unknown sections are rejected here; unknown keys within a section are
/// rejected during scenario construction, both by name.
ParsedConfig parse_config_text(const std::string& text);

/// File variant of parse_config_text.
ParsedConfig parse_config_file(const std::string& path);

/// Builds a validated Scenario.  Every PhysParams, FrictionLaw and Scenario
/// field is representable; errors name the offending section/key.
Scenario scenario_from_config(const ParsedConfig& cfg);

/// parse + build in one call.
Scenario load_scenario(const std::string& path);

}  // namespace qhd
