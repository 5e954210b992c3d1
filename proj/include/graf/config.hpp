#pragma once

// Typed access to JSON run configs. Every error names the offending field
// path, e.g. "search.forest.n_trees: expected integer".

#include <string>
#include <string_view>
#include <vector>

#include "graf/common.hpp"
#include "json.hpp"

namespace graf {

inline constexpr int kConfigSchemaVersion = 1;

class ConfigNode {
 public:
  /// Keeps a reference to j; the document must outlive the node.
  explicit ConfigNode(const nlohmann::json& j, std::string path = "");
  ConfigNode(nlohmann::json&&, std::string = "") = delete;

  const std::string& path() const { return path_; }
  bool has(std::string_view key) const;
  ConfigNode child(std::string_view key) const;
  const nlohmann::json& raw() const { return j_; }

  std::string get_string(std::string_view key) const;
  std::string get_string(std::string_view key, std::string fallback) const;
  long long get_int(std::string_view key, long long fallback) const;
  std::uint64_t get_uint(std::string_view key, std::uint64_t fallback) const;
  double get_double(std::string_view key, double fallback) const;
  bool get_bool(std::string_view key, bool fallback) const;
  std::vector<std::string> get_strings(std::string_view key, std::vector<std::string> fallback) const;
  std::vector<std::uint64_t> get_uints(std::string_view key, std::vector<std::uint64_t> fallback) const;

  /// Throws on keys outside `allowed`.
  void only(std::initializer_list<std::string_view> allowed) const;
  /// Accepts a missing "schema_version" or one equal to kConfigSchemaVersion.
  void check_schema_version() const;

  [[noreturn]] void fail(std::string_view key, std::string_view message) const;

 private:
  const nlohmann::json& at(std::string_view key) const;
  std::string field(std::string_view key) const;

  const nlohmann::json& j_;
  std::string path_;
};

}  // namespace graf
