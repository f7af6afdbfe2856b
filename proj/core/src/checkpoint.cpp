#include "hesskit/checkpoint.hpp"

#include <cstdio>
#include <stdexcept>

namespace hesskit {

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::map<std::string, std::string> metadata;
  metadata["model"] = ckpt.spec.to_json();
  metadata["seed"] = std::to_string(ckpt.seed);
  metadata["config_hash"] = ckpt.config_hash;
  save_param_vector(path, ckpt.theta, metadata);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::map<std::string, std::string> metadata;
  Checkpoint ckpt;
  ckpt.theta = load_param_vector(path, &metadata);
  const auto model = metadata.find("model");
  if (model == metadata.end()) {
    throw std::runtime_error("checkpoint missing model metadata: " + path);
  }
  ckpt.spec = MlpSpec::from_json(model->second);
  if (auto it = metadata.find("seed"); it != metadata.end()) ckpt.seed = std::stoull(it->second);
  if (auto it = metadata.find("config_hash"); it != metadata.end()) ckpt.config_hash = it->second;
  if (static_cast<int>(ckpt.theta.size()) != ckpt.spec.param_count()) {
    throw std::runtime_error("checkpoint parameter count does not match model spec");
  }
  return ckpt;
}

std::string config_hash(const std::string& canonical_text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical_text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace hesskit
