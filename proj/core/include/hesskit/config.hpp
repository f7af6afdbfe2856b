#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hesskit {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Run configuration: a JSON key-value tree validated against the documented
/// schema. Unknown keys are errors (drift protection); every getter takes the
/// default it falls back to, so the resolved configuration is reproducible
/// from the manifest alone.
class RunConfig {
public:
  RunConfig();
  static RunConfig from_json_text(const std::string& text);
  static RunConfig from_file(const std::string& path);

  /// Dotted-path override ("surgery.alpha_max0=0.05"); values parse as JSON
  /// first and fall back to strings.
  void set_override(const std::string& dotted_key, const std::string& value);

  bool has(const std::string& dotted_path) const;
  double number(const std::string& dotted_path, double fallback) const;
  int integer(const std::string& dotted_path, int fallback) const;
  bool boolean(const std::string& dotted_path, bool fallback) const;
  std::string text(const std::string& dotted_path, const std::string& fallback) const;
  std::vector<double> numbers(const std::string& dotted_path,
                              std::vector<double> fallback) const;
  std::vector<int> integers(const std::string& dotted_path, std::vector<int> fallback) const;

  std::uint64_t seed() const;

  /// Canonical (sorted-key) dump; hashed into checkpoints and manifests.
  std::string canonical() const;
  const nlohmann::json& raw() const { return tree_; }

private:
  void validate() const;
  const nlohmann::json* find(const std::string& dotted_path) const;

  nlohmann::json tree_;
};

}  // namespace hesskit
