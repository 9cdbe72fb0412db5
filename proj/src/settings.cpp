#include "camel/settings.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace camel {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace

std::map<std::string, std::string> read_settings(std::istream& in, const std::string& source) {
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": expected key=value");
    }
    std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": empty key");
    if (!kv.emplace(key, trim(t.substr(eq + 1))).second) {
      throw std::invalid_argument(source + ":" + std::to_string(lineno) + ": duplicate key " + key);
    }
  }
  return kv;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw std::invalid_argument(key + ": not a number: '" + value + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) throw std::invalid_argument(key + ": not an integer: '" + value + "'");
  return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw std::invalid_argument(key + ": not a boolean: '" + value + "'");
}

std::vector<std::pair<std::string, std::string>> agent_settings(const AgentConfig& c) {
  return {
      {"gamma", format_double(c.gamma)},
      {"tau", format_double(c.tau)},
      {"policy_delay", std::to_string(c.policy_delay)},
      {"explore_sigma", format_double(c.explore_sigma)},
      {"target_sigma", format_double(c.target_sigma)},
      {"noise_clip", format_double(c.noise_clip)},
      {"batch_size", std::to_string(c.batch_size)},
      {"buffer_capacity", std::to_string(c.buffer_capacity)},
      {"learning_starts", std::to_string(c.learning_starts)},
      {"half_window", format_double(c.half_window)},
      {"masking_fraction", format_double(c.schedule.masking_fraction)},
      {"schedule_steps", std::to_string(c.schedule.total_steps)},
      {"masking_aware", c.masking_aware ? "true" : "false"},
      {"epsilon_masking", c.epsilon_masking ? "true" : "false"},
      {"hidden", join_ints(c.hidden)},
      {"learning_rate", format_double(c.learning_rate)},
      {"actor_final_scale", format_double(c.actor_final_scale)},
      {"full_target_bounds", c.full_target_bounds ? "true" : "false"},
  };
}

bool apply_agent_setting(AgentConfig& c, const std::string& key, const std::string& value) {
  if (key == "gamma") {
    c.gamma = parse_double(key, value);
  } else if (key == "tau") {
    c.tau = parse_double(key, value);
  } else if (key == "policy_delay") {
    c.policy_delay = static_cast<int>(parse_int(key, value));
  } else if (key == "explore_sigma") {
    c.explore_sigma = parse_double(key, value);
  } else if (key == "target_sigma") {
    c.target_sigma = parse_double(key, value);
  } else if (key == "noise_clip") {
    c.noise_clip = parse_double(key, value);
  } else if (key == "batch_size") {
    c.batch_size = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "buffer_capacity") {
    c.buffer_capacity = static_cast<std::size_t>(parse_int(key, value));
  } else if (key == "learning_starts") {
    c.learning_starts = parse_int(key, value);
  } else if (key == "half_window") {
    c.half_window = parse_double(key, value);
  } else if (key == "masking_fraction") {
    c.schedule.masking_fraction = parse_double(key, value);
  } else if (key == "schedule_steps") {
    c.schedule.total_steps = parse_int(key, value);
  } else if (key == "masking_aware") {
    c.masking_aware = parse_bool(key, value);
  } else if (key == "epsilon_masking") {
    c.epsilon_masking = parse_bool(key, value);
  } else if (key == "hidden") {
    std::vector<int> sizes;
    std::stringstream ss(value);
    std::string part;
    while (std::getline(ss, part, ',')) sizes.push_back(static_cast<int>(parse_int(key, part)));
    c.hidden = std::move(sizes);
  } else if (key == "learning_rate") {
    c.learning_rate = parse_double(key, value);
  } else if (key == "actor_final_scale") {
    c.actor_final_scale = parse_double(key, value);
  } else if (key == "full_target_bounds") {
    c.full_target_bounds = parse_bool(key, value);
  } else {
    return false;
  }
  return true;
}

}  // namespace camel
