#include "hesskit/config.hpp"

#include <fstream>
#include <sstream>

namespace hesskit {

namespace {

// Leaf markers: "num", "int", "str", "bool", "num[]", "int[]", "num|auto".
const nlohmann::json& schema() {
  static const nlohmann::json s = {
      {"seed", "int"},
      {"fixture",
       {{"preset", "str"},
        {"classes", "int"},
        {"dim", "int"},
        {"frequencies", "num[]"},
        {"separation", "num"},
        {"entangled_pair", "int[]"},
        {"entangled_separation", "num"},
        {"total_samples", "int"},
        {"train_fraction", "num"},
        {"sensitivity_fraction", "num"},
        {"seed", "int"}}},
      {"model",
       {{"hidden", "int[]"},
        {"activation", "str"},
        {"loss", "str"},
        {"focal_gamma", "num"},
        {"class_weights", "num[]"}}},
      {"train",
       {{"epochs", "int"},
        {"lr", "num"},
        {"batch_size", "int"},
        {"optimizer", "str"},
        {"seed", "int"}}},
      {"lanczos", {{"m", "int"}, {"tol", "num"}, {"seed", "int"}, {"gap_factor", "num"}}},
      {"hvp", {{"batch", "int"}, {"stratified", "bool"}, {"per_class", "int"}}},
      {"slq",
       {{"m", "int"},
        {"k", "int"},
        {"sigma2", "num"},
        {"grid_points", "int"},
        {"grid_lo", "num"},
        {"grid_hi", "num"},
        {"k_values", "int[]"},
        {"k_ref", "int"}}},
      {"surgery",
       {{"iterations", "int"},
        {"k_spikes", "int"},
        {"budget", "str"},
        {"alpha_max0", "num"},
        {"alpha_min", "num"},
        {"p_exponent", "num|auto"},
        {"target", "str"},
        {"protect_threshold", "num"},
        {"protect_floor", "num"},
        {"sigma_guard", "num"},
        {"class_drop_guard", "num"}}},
      {"deflation",
       {{"phases", "int"},
        {"spikes_per_phase", "int"},
        {"iters_per_phase", "int"},
        {"alpha_max1", "num"},
        {"lanczos_m", "int"},
        {"max_stored_vectors", "int"}}},
      {"sensitivity", {{"eps", "num"}, {"k_spikes", "int"}, {"stratified_cap", "int"}}},
      {"bulkwalk",
       {{"steps", "int"},
        {"epsilon", "num"},
        {"target_displacement", "num"},
        {"wall_tol", "num"},
        {"basis_m", "int"},
        {"basis_k", "int"},
        {"history_cap", "int"}}},
      {"linearize",
       {{"grid_lo", "num"}, {"grid_hi", "num"}, {"points", "int"}, {"probe_eps", "num"}}},
      {"stability", {{"batch_sizes", "int[]"}, {"ks", "int[]"}, {"lanczos_m", "int"}, {"top_k", "int"}}},
      {"baselines",
       {{"tau_sweep", "num[]"},
        {"focal_gamma", "num"},
        {"logit_adjust_tau", "num"},
        {"ft_epochs", "int"},
        {"ft_lr", "num"}}},
      {"rank", {{"eps", "num"}, {"k_spikes", "int"}}},
      {"spiked",
       {{"dim", "int"}, {"spikes", "num[]"}, {"bulk_scale", "num"}, {"seed", "int"}}},
  };
  return s;
}

bool leaf_matches(const std::string& kind, const nlohmann::json& value) {
  if (kind == "num") return value.is_number();
  if (kind == "int") return value.is_number_integer();
  if (kind == "str") return value.is_string();
  if (kind == "bool") return value.is_boolean();
  if (kind == "num|auto") return value.is_number() || (value.is_string() && value == "auto");
  if (kind == "num[]") {
    if (!value.is_array()) return false;
    for (const auto& v : value) {
      if (!v.is_number()) return false;
    }
    return true;
  }
  if (kind == "int[]") {
    if (!value.is_array()) return false;
    for (const auto& v : value) {
      if (!v.is_number_integer()) return false;
    }
    return true;
  }
  return false;
}

void validate_node(const nlohmann::json& node, const nlohmann::json& allowed,
                   const std::string& prefix) {
  if (!node.is_object()) {
    throw ConfigError("config: expected object at '" + (prefix.empty() ? "<root>" : prefix) + "'");
  }
  for (const auto& [key, value] : node.items()) {
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    if (!allowed.contains(key)) {
      throw ConfigError("config: unknown key '" + path + "'");
    }
    const auto& rule = allowed.at(key);
    if (rule.is_string()) {
      if (!leaf_matches(rule.get<std::string>(), value)) {
        throw ConfigError("config: key '" + path + "' must be of type " +
                          rule.get<std::string>());
      }
    } else {
      validate_node(value, rule, path);
    }
  }
}

}  // namespace

RunConfig::RunConfig() : tree_(nlohmann::json::object()) {}

RunConfig RunConfig::from_json_text(const std::string& text) {
  RunConfig config;
  try {
    config.tree_ = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("config: parse error: ") + e.what());
  }
  config.validate();
  return config;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return from_json_text(buf.str());
}

void RunConfig::set_override(const std::string& dotted_key, const std::string& value) {
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(value);
  } catch (const nlohmann::json::parse_error&) {
    parsed = value;  // bare string
  }
  nlohmann::json* node = &tree_;
  std::istringstream keys(dotted_key);
  std::string key, next;
  if (!std::getline(keys, key, '.')) throw ConfigError("config: empty override key");
  while (std::getline(keys, next, '.')) {
    node = &(*node)[key];
    key = next;
  }
  (*node)[key] = parsed;
  validate();
}

void RunConfig::validate() const { validate_node(tree_, schema(), ""); }

const nlohmann::json* RunConfig::find(const std::string& dotted_path) const {
  const nlohmann::json* node = &tree_;
  std::istringstream keys(dotted_path);
  std::string key;
  while (std::getline(keys, key, '.')) {
    if (!node->is_object() || !node->contains(key)) return nullptr;
    node = &node->at(key);
  }
  return node;
}

bool RunConfig::has(const std::string& dotted_path) const { return find(dotted_path) != nullptr; }

double RunConfig::number(const std::string& path, double fallback) const {
  const auto* node = find(path);
  return node != nullptr ? node->get<double>() : fallback;
}

int RunConfig::integer(const std::string& path, int fallback) const {
  const auto* node = find(path);
  return node != nullptr ? node->get<int>() : fallback;
}

bool RunConfig::boolean(const std::string& path, bool fallback) const {
  const auto* node = find(path);
  return node != nullptr ? node->get<bool>() : fallback;
}

std::string RunConfig::text(const std::string& path, const std::string& fallback) const {
  const auto* node = find(path);
  return node != nullptr && node->is_string() ? node->get<std::string>() : fallback;
}

std::vector<double> RunConfig::numbers(const std::string& path,
                                       std::vector<double> fallback) const {
  const auto* node = find(path);
  return node != nullptr ? node->get<std::vector<double>>() : fallback;
}

std::vector<int> RunConfig::integers(const std::string& path, std::vector<int> fallback) const {
  const auto* node = find(path);
  return node != nullptr ? node->get<std::vector<int>>() : fallback;
}

std::uint64_t RunConfig::seed() const {
  return static_cast<std::uint64_t>(integer("seed", 1));
}

std::string RunConfig::canonical() const { return tree_.dump(2); }

}  // namespace hesskit
