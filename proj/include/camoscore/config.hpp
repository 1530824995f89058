#pragma once

#include <json.hpp>
#include <string>

#include "camoscore/scoring.hpp"

namespace camo {

/// Flat JSON view of a ScoreConfig, as written into reports and accepted by
/// `--config` files.
nlohmann::json config_to_json(const ScoreConfig& config);

/// Overrides the fields present in `j`. Unknown keys and invalid values raise
/// ConfigError.
void apply_config_json(ScoreConfig& config, const nlohmann::json& j);

/// Parses "builtin" or "external:DIR".
SourceSpec parse_source_spec(const std::string& text);
std::string format_source_spec(const SourceSpec& spec);

/// Throws ConfigError when a value is out of range.
void validate_config(const ScoreConfig& config);

/// 16 hex digits of FNV-1a over the canonical JSON of the result-affecting
/// settings (thread count and dump directory excluded).
std::string config_hash(const ScoreConfig& config);

}  // namespace camo
