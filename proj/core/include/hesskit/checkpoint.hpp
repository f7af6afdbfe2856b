#pragma once

#include <cstdint>
#include <string>

#include "hesskit/mlp.hpp"
#include "hesskit/param_vector.hpp"

namespace hesskit {

/// Model checkpoint: the parameter vector in its hex file format, preceded by
/// a metadata block carrying the model spec, the training seed and a hash of
/// the resolved run configuration.
struct Checkpoint {
  MlpSpec spec;
  ParamVector theta;
  std::uint64_t seed = 0;
  std::string config_hash;
};

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

/// FNV-1a 64-bit over the canonical config text.
std::string config_hash(const std::string& canonical_text);

}  // namespace hesskit
