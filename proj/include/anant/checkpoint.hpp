#pragma once

// Model checkpoints: JSON documents holding the run configuration, its
// hash, the body-network specs, the partition and the flat parameters.
// Doubles are written in shortest round-trip form, so a reload is exact.

#include <string>

#include "anant/ansatz.hpp"
#include "anant/config.hpp"

namespace anant {

struct Checkpoint {
  AnantModel model;
  RunConfig config;
  std::string config_hash;
};

void save_checkpoint(const std::string& path, const AnantModel& model, const RunConfig& config);
Checkpoint load_checkpoint(const std::string& path);

nlohmann::json spec_to_json(const BodySpec& spec);
BodySpec spec_from_json(const nlohmann::json& j);

/// Throws MismatchError when the checkpoint cannot serve the given config.
void check_compatible(const Checkpoint& ckpt, const RunConfig& config);

}  // namespace anant
