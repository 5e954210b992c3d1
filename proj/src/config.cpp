#include "graf/config.hpp"

#include <algorithm>

namespace graf {

ConfigNode::ConfigNode(const nlohmann::json& j, std::string path) : j_(j), path_(std::move(path)) {
  if (!j_.is_object()) throw Error((path_.empty() ? std::string("config") : path_) + ": expected object");
}

std::string ConfigNode::field(std::string_view key) const {
  return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
}

void ConfigNode::fail(std::string_view key, std::string_view message) const {
  throw Error(field(key) + ": " + std::string(message));
}

bool ConfigNode::has(std::string_view key) const {
  return j_.contains(std::string(key)) && !j_.at(std::string(key)).is_null();
}

const nlohmann::json& ConfigNode::at(std::string_view key) const { return j_.at(std::string(key)); }

ConfigNode ConfigNode::child(std::string_view key) const {
  if (!has(key)) fail(key, "missing");
  if (!at(key).is_object()) fail(key, "expected object");
  return ConfigNode(at(key), field(key));
}

std::string ConfigNode::get_string(std::string_view key) const {
  if (!has(key)) fail(key, "missing");
  return get_string(key, "");
}

std::string ConfigNode::get_string(std::string_view key, std::string fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_string()) fail(key, "expected string");
  return at(key).get<std::string>();
}

long long ConfigNode::get_int(std::string_view key, long long fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_number_integer()) fail(key, "expected integer");
  return at(key).get<long long>();
}

std::uint64_t ConfigNode::get_uint(std::string_view key, std::uint64_t fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_number_unsigned() && !(at(key).is_number_integer() && at(key).get<long long>() >= 0))
    fail(key, "expected non-negative integer");
  return at(key).get<std::uint64_t>();
}

double ConfigNode::get_double(std::string_view key, double fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_number()) fail(key, "expected number");
  return at(key).get<double>();
}

bool ConfigNode::get_bool(std::string_view key, bool fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_boolean()) fail(key, "expected boolean");
  return at(key).get<bool>();
}

std::vector<std::string> ConfigNode::get_strings(std::string_view key, std::vector<std::string> fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_array()) fail(key, "expected array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < at(key).size(); ++i) {
    if (!at(key)[i].is_string()) fail(std::string(key) + "[" + std::to_string(i) + "]", "expected string");
    out.push_back(at(key)[i].get<std::string>());
  }
  return out;
}

std::vector<std::uint64_t> ConfigNode::get_uints(std::string_view key, std::vector<std::uint64_t> fallback) const {
  if (!has(key)) return fallback;
  if (!at(key).is_array()) fail(key, "expected array of integers");
  std::vector<std::uint64_t> out;
  for (std::size_t i = 0; i < at(key).size(); ++i) {
    const auto& v = at(key)[i];
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
      fail(std::string(key) + "[" + std::to_string(i) + "]", "expected non-negative integer");
    out.push_back(v.get<std::uint64_t>());
  }
  return out;
}

void ConfigNode::only(std::initializer_list<std::string_view> allowed) const {
  for (const auto& [k, v] : j_.items())
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end()) fail(k, "unknown field");
}

void ConfigNode::check_schema_version() const {
  if (get_int("schema_version", kConfigSchemaVersion) != kConfigSchemaVersion)
    fail("schema_version", "unsupported, expected " + std::to_string(kConfigSchemaVersion));
}

}  // namespace graf
