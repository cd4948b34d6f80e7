#pragma once

#include <string>

#include "pgcn/model.hpp"

namespace pgcn {

struct Checkpoint {
  ModelConfig config;
  ParameterSet params;
};

// Binary checkpoint: magic "PGCK", version byte, a JSON model-config block,
// then named tensors with shape headers and 64-bit little-endian payloads.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace pgcn
