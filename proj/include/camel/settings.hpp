#pragma once

#include <istream>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "camel/agent.hpp"

namespace camel {

/// Parses `key=value` lines. Blank lines and lines starting with '#' are skipped;
/// whitespace around keys and values is trimmed. Duplicate keys are an error.
std::map<std::string, std::string> read_settings(std::istream& in, const std::string& source);

/// Every AgentConfig field as (key, value) with round-trip precision.
std::vector<std::pair<std::string, std::string>> agent_settings(const AgentConfig& config);

/// Sets one AgentConfig field; returns false when `key` is not an agent setting.
/// Malformed values throw std::invalid_argument.
bool apply_agent_setting(AgentConfig& config, const std::string& key, const std::string& value);

std::string format_double(double v);
double parse_double(const std::string& key, const std::string& value);
long long parse_int(const std::string& key, const std::string& value);
bool parse_bool(const std::string& key, const std::string& value);

}  // namespace camel
